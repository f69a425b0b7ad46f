import init, { solveFixture, defaultMaze, planMaze, shapeFromShading } from "./pkg/eikonal_demo.js";

const MAZE_SOURCE = [2, 2];

// Grey ramp from min to max; `mask` pixels are drawn red.
function draw(canvas, view, mask) {
  const { rows, cols } = view;
  const values = view.values();
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  const span = hi > lo ? hi - lo : 1;
  canvas.width = cols;
  canvas.height = rows;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(cols, rows);
  for (let k = 0; k < values.length; k++) {
    const g = Math.round(255 * (values[k] - lo) / span);
    const wall = mask && mask[k] >= 128;
    img.data[4 * k] = wall ? 200 : g;
    img.data[4 * k + 1] = wall ? 40 : g;
    img.data[4 * k + 2] = wall ? 40 : g;
    img.data[4 * k + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  const path = view.path();
  if (path.length >= 4) {
    ctx.strokeStyle = "#2a6";
    ctx.lineWidth = 0.6;
    ctx.beginPath();
    ctx.moveTo(path[1] + 0.5, path[0] + 0.5);
    for (let k = 2; k < path.length; k += 2) {
      ctx.lineTo(path[k + 1] + 0.5, path[k] + 0.5);
    }
    ctx.stroke();
  }
}

function show(id, text) {
  document.getElementById(id).textContent = text;
}

function run(summaryId, canvasId, f, mask) {
  try {
    const view = f();
    show(summaryId, view.summary);
    draw(document.getElementById(canvasId), view, mask);
  } catch (e) {
    show(summaryId, String(e));
  }
}

await init();

document.getElementById("solve").onclick = () => {
  const name = document.getElementById("fixture").value;
  const backend = document.getElementById("backend").value;
  show("fixture-summary", "solving...");
  setTimeout(() => run("fixture-summary", "fixture-canvas", () => solveFixture(name, backend)), 0);
};

const maze = defaultMaze();
const size = Math.round(Math.sqrt(maze.length));
const mazeCanvas = document.getElementById("maze-canvas");
function plan(row, col) {
  run("maze-summary", "maze-canvas", () => planMaze(maze, size, MAZE_SOURCE[0], MAZE_SOURCE[1], row, col), maze);
}
mazeCanvas.onclick = (ev) => {
  const rect = mazeCanvas.getBoundingClientRect();
  const col = Math.floor((ev.clientX - rect.left) / rect.width * size);
  const row = Math.floor((ev.clientY - rect.top) / rect.height * size);
  plan(row, col);
};
plan(size - 3, size - 3);

document.getElementById("sfs").onclick = () => {
  const surface = document.getElementById("surface").value;
  run("sfs-summary", "sfs-canvas", () => shapeFromShading(surface, 101));
};
