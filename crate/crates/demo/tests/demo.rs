use eikonal_demo::*;

#[test]
fn fixture_views() {
    let v = run_fixture("example1", "sweep").unwrap();
    assert_eq!((v.rows(), v.cols()), (257, 257));
    assert_eq!(v.values().len(), 257 * 257);
    assert!(v.path().is_empty());
    assert!(v.summary().contains("% from the exact solution"), "{}", v.summary());
    let p = run_fixture("example2", "perturb").unwrap();
    assert!(p.values().iter().all(|x| x.is_finite()));
    assert!(run_fixture("example1", "magic").is_err());
    assert!(run_fixture("nope", "sweep").is_err());
}

#[test]
fn default_maze_path_avoids_walls() {
    let maze = default_maze();
    assert_eq!(maze.len(), MAZE_SIZE * MAZE_SIZE);
    let v = run_maze(&maze, MAZE_SIZE, [2, 2], [45, 45]).unwrap();
    assert!(v.summary().starts_with("path reached_source"), "{}", v.summary());
    let pts = v.path_points();
    assert!(pts.len() > 2);
    for p in &pts {
        let (r, c) = (p[0].round() as usize, p[1].round() as usize);
        assert_eq!(maze[r * MAZE_SIZE + c], 0, "{p:?} is on a wall");
    }
    // the route snakes through the three gaps
    assert!(pts.iter().any(|p| p[1] < 8.0 && (24.0..27.0).contains(&p[0])));
}

#[test]
fn maze_rejects_bad_input() {
    let maze = default_maze();
    assert!(run_maze(&maze[1..], MAZE_SIZE, [2, 2], [45, 45]).is_err());
    assert!(run_maze(&maze, MAZE_SIZE, [2, 2], [99, 45]).is_err());
}

#[test]
fn sfs_view_beats_flat_guess() {
    let v = run_sfs("cone", 41).unwrap();
    assert_eq!((v.rows(), v.cols()), (41, 41));
    let nums: Vec<f64> = v
        .summary()
        .split([' ', ','])
        .filter_map(|t| t.parse().ok())
        .collect();
    assert!(nums[1] >= 5.0 * nums[0], "{}", v.summary());
    assert!(run_sfs("teapot", 41).is_err());
}
