//! The per-step agent loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EpisodeResult, Outcome};
use crate::config::Config;
use crate::error::{contract, Error, Result};
use crate::grid::{Cell, CellWalk, Point};
use crate::islands::{attach_names, cluster, FrontierIsland, Sighting};
use crate::language::{TallyCache, VoteOracle};
use crate::mapping::{extract_frontiers, CellState, OccupancyGrid};
use crate::planner::{distance_field, inflate, next_action, plan_with, shortest_path_length, waypoints};
use crate::scene::{
    goal_reached, sense, step, wrap_angle, Action, Heading, Observation, Pose, Scene, FORWARD_STEP_M, SUCCESS_RADIUS_M,
};
use crate::valuemaps::{
    compose_affordance, dwfe_scores, goal_directed_target, select_target_where, shf_inject, trajectory_field,
    FieldKind, SelectorMode, ValueField,
};

/// Runs one episode to stop or timeout. Internal errors end the episode
/// with [`Outcome::Aborted`] rather than propagating.
pub fn run_episode(
    scene: &Scene,
    mode: SelectorMode,
    oracle: Option<&dyn VoteOracle>,
    seed: u64,
    cfg: &Config,
) -> EpisodeResult {
    let mut result = EpisodeResult {
        scene_id: scene.id.clone(),
        episode: 0,
        mode,
        seed,
        goal_category: scene.goal_category.clone(),
        success: false,
        outcome: Outcome::Timeout,
        steps: 0,
        path_length_m: 0.0,
        shortest_m: 0.0,
        goal_seen_step: None,
        abstentions: 0,
        oracle_errors: 0,
        collisions: 0,
        error: None,
        trajectory: vec![scene.start_pose],
        final_frontiers: vec![],
        final_islands: vec![],
    };
    let mut agent = Agent::new(scene, mode, oracle, seed, cfg);
    if let Err(e) = agent.run(&mut result) {
        result.success = false;
        result.outcome = Outcome::Aborted;
        result.error = Some(e.to_string());
    }
    result.abstentions = agent.abstentions;
    result.oracle_errors = agent.oracle_errors;
    let frontiers = extract_frontiers(&agent.belief);
    result.final_islands = cluster(&frontiers, scene.dims.resolution, cfg.cluster.eps_m, cfg.cluster.min_samples)
        .map(|isl| isl.iter().map(|f| f.centroid).collect())
        .unwrap_or_default();
    result.final_frontiers = frontiers.cells;
    result
}

struct Agent<'a> {
    scene: &'a Scene,
    cfg: &'a Config,
    mode: SelectorMode,
    oracle: Option<&'a dyn VoteOracle>,
    belief: OccupancyGrid,
    sightings: Vec<Sighting>,
    goal_points: Vec<Point>,
    rng: ChaCha8Rng,
    blacklist: Vec<Point>,
    target: Option<Cell>,
    /// Best geodesic distance to the current target and steps since it improved.
    best_dist: f64,
    stalled: u32,
    /// Island centroid the random baseline is heading for.
    committed: Option<Point>,
    /// Heading chosen to get off a wall corner; forward once reached.
    recovery: Option<Heading>,
    cache: TallyCache,
    path: Vec<Point>,
    abstentions: u32,
    oracle_errors: u32,
}

impl<'a> Agent<'a> {
    fn new(
        scene: &'a Scene,
        mode: SelectorMode,
        oracle: Option<&'a dyn VoteOracle>,
        seed: u64,
        cfg: &'a Config,
    ) -> Self {
        Self {
            scene,
            cfg,
            mode,
            oracle,
            belief: OccupancyGrid::unknown(scene.dims),
            sightings: Vec::new(),
            goal_points: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            blacklist: Vec::new(),
            target: None,
            best_dist: f64::INFINITY,
            stalled: 0,
            committed: None,
            recovery: None,
            cache: TallyCache::default(),
            path: Vec::new(),
            abstentions: 0,
            oracle_errors: 0,
        }
    }

    fn run(&mut self, r: &mut EpisodeResult) -> Result<()> {
        let scene = self.scene;
        if self.mode == SelectorMode::GoalDirected {
            return Err(contract("goal_directed is entered at run time, not configured"));
        }
        if self.mode == SelectorMode::Shf && self.oracle.is_none() {
            return Err(contract("shf mode needs a vote oracle"));
        }
        let mut pose = scene.start_pose;
        r.shortest_m = shortest_path_length(scene, &pose, &scene.goal_category)
            .ok_or_else(|| contract(format!("goal {} unreachable from the start", scene.goal_category)))?;
        let max_steps = self.cfg.agent.max_steps;
        while r.steps < max_steps {
            let obs = sense(scene, &pose, &self.cfg.sensor);
            self.belief.integrate(&pose, &obs);
            self.record_sightings(&pose, &obs);
            if r.goal_seen_step.is_none() && !self.goal_points.is_empty() {
                r.goal_seen_step = Some(r.steps);
            }
            self.path.push(pose.position());

            let action = if !self.goal_points.is_empty() && goal_reached(scene, &pose, &obs) {
                Action::Stop
            } else {
                self.decide(&pose)?
            };
            r.steps += 1;
            if action == Action::Stop {
                r.success = goal_reached(scene, &pose, &obs);
                r.outcome = if r.success { Outcome::Success } else { Outcome::FalseStop };
                r.trajectory.push(pose);
                return Ok(());
            }
            let next = step(scene, pose, action);
            if action == Action::Forward {
                if next == pose {
                    r.collisions += 1;
                    self.bump(&pose);
                } else {
                    r.path_length_m += pose.position().dist(next.position());
                }
            }
            pose = next;
            r.trajectory.push(pose);
        }
        r.outcome = Outcome::Timeout;
        Ok(())
    }

    fn record_sightings(&mut self, pose: &Pose, obs: &Observation) {
        let dims = self.scene.dims;
        for v in &obs.visible_objects {
            let p = v.world_position(pose);
            let c = dims.world_to_cell(p.x, p.y);
            let known = self
                .sightings
                .iter()
                .any(|s| s.category == v.category && dims.world_to_cell(s.position.x, s.position.y) == c);
            if !known {
                self.sightings.push(Sighting {
                    category: v.category.clone(),
                    position: p,
                });
            }
            if v.category == self.scene.goal_category {
                self.goal_points.push(p);
            }
        }
    }

    /// Collision feedback: the blocking cell becomes known as occupied.
    fn bump(&mut self, pose: &Pose) {
        let (ux, uy) = pose.heading.unit();
        let dims = self.scene.dims;
        if let Some((c, _)) = CellWalk::new(dims, pose.x, pose.y, ux, uy, FORWARD_STEP_M)
            .find(|(c, _)| self.scene.is_occupied(*c))
        {
            self.belief.set(c, CellState::Occupied);
        }
    }

    /// Inflated belief with a free bubble around the agent so it can always
    /// leave a cell that hugs a wall.
    fn planning_grid(&self, inflated: &OccupancyGrid, me: Cell) -> OccupancyGrid {
        let r = self.cfg.planner.inflation_cells;
        let mut grid = inflated.clone();
        let dims = grid.dims();
        for dy in -(r + 1)..=(r + 1) {
            for dx in -(r + 1)..=(r + 1) {
                let c = me.offset(dx, dy);
                if dims.contains(c) && self.belief.is_free(c) {
                    grid.set(c, CellState::Free);
                }
            }
        }
        grid
    }

    fn decide(&mut self, pose: &Pose) -> Result<Action> {
        let dims = self.scene.dims;
        let me = dims.world_to_cell(pose.x, pose.y);
        let inflated = inflate(&self.belief, self.cfg.planner.inflation_cells);
        let mut grid = self.planning_grid(&inflated, me);
        if !grid.is_free(me) {
            grid = self.belief.clone();
        }
        if !grid.is_free(me) {
            // Only possible before the first integration covers the start.
            return Ok(Action::TurnLeft);
        }
        let dist = distance_field(&grid, me);
        if !self.goal_points.is_empty() {
            return self.goal_directed(pose, &grid, &dist);
        }

        let frontiers = extract_frontiers(&self.belief);
        let islands = cluster(&frontiers, dims.resolution, self.cfg.cluster.eps_m, self.cfg.cluster.min_samples)?;
        if islands.is_empty() {
            // Map complete without a goal sighting: hold position.
            return Ok(Action::TurnLeft);
        }
        let islands = attach_names(islands, &self.sightings, dims.resolution, self.cfg.cluster.name_radius_m);

        // Targets are island cells that stay free after inflation, are
        // reachable now and have not been given up.
        let bl_r2 = self.cfg.agent.blacklist_radius_m.powi(2);
        let mut allowed = vec![false; dims.len()];
        for c in islands.iter().flat_map(|f| &f.cells) {
            let i = dims.index(*c);
            let (x, y) = dims.cell_center(*c);
            allowed[i] = inflated.states()[i] == CellState::Free
                && dist[i].is_finite()
                && !self.blacklist.iter().any(|b| (b.x - x).powi(2) + (b.y - y).powi(2) <= bl_r2);
        }

        let (target, aff) = match self.mode {
            SelectorMode::Dwfe | SelectorMode::Shf => {
                let mut avm = dwfe_scores(&self.belief, &islands, self.cfg.valuemap.dwfe_aggregate);
                if self.mode == SelectorMode::Shf {
                    avm = self.inject_votes(avm, &islands)?;
                }
                let mut fields = vec![avm];
                if self.cfg.valuemap.trajectory_penalty {
                    fields.push(trajectory_field(
                        dims,
                        &self.path,
                        self.cfg.valuemap.trajectory_radius_m,
                        self.cfg.valuemap.trajectory_lambda,
                    ));
                }
                let aff = compose_affordance(&fields)?;
                match select_target_where(&aff, &grid, |i| allowed[i]) {
                    Ok(t) => (t, aff),
                    Err(Error::Contract(_)) => return Ok(Action::TurnLeft),
                    Err(e) => return Err(e),
                }
            }
            SelectorMode::NearestFrontier | SelectorMode::RandomFrontier => {
                // Each island is represented by its allowed cell nearest its centroid.
                let reps: Vec<Option<Cell>> = islands
                    .iter()
                    .map(|f| {
                        let own: Vec<usize> =
                            f.cells.iter().map(|c| dims.index(*c)).filter(|&i| allowed[i]).collect();
                        nearest_candidate(&own, dims, f.centroid)
                    })
                    .collect();
                let pick = if self.mode == SelectorMode::NearestFrontier {
                    reps.iter()
                        .enumerate()
                        .filter_map(|(k, r)| r.map(|c| (k, dist[dims.index(c)])))
                        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                        .map(|(k, _)| k)
                } else {
                    self.random_pick(&islands, &reps)
                };
                let Some(k) = pick else { return Ok(Action::TurnLeft) };
                let aff = ValueField::constant(dims, FieldKind::Affordance, 0.5);
                (reps[k].expect("picked island has a representative"), aff)
            }
            SelectorMode::GoalDirected => unreachable!("checked at episode start"),
        };

        let d_target = dist[dims.index(target)];
        let same = self
            .target
            .is_some_and(|t| (t.dist2(target) as f64).sqrt() * dims.resolution <= self.cfg.agent.blacklist_radius_m);
        if !same || d_target < self.best_dist - 1e-9 {
            self.best_dist = d_target;
            self.stalled = 0;
        } else {
            self.stalled += 1;
        }
        self.target = Some(target);
        let action = self.follow(pose, &grid, &aff, me, target)?;
        log::trace!(
            "{} at ({:.2}, {:.2}) h{} target {:?} islands {} stalled {} -> {:?}",
            self.mode,
            pose.x,
            pose.y,
            pose.heading.degrees(),
            target,
            islands.len(),
            self.stalled,
            action
        );
        if self.stalled >= self.cfg.agent.stall_steps {
            self.blacklist.push(dims_center(dims, target));
            self.stalled = 0;
            self.target = None;
            self.committed = None;
        }
        Ok(action.unwrap_or(Action::TurnLeft))
    }

    fn inject_votes(&mut self, avm: ValueField, islands: &[FrontierIsland]) -> Result<ValueField> {
        let oracle = self.oracle.ok_or_else(|| contract("shf mode needs a vote oracle"))?;
        let goal = &self.scene.goal_category;
        let k = self.cfg.shf.k;
        let tally = if self.cfg.llm.memoize {
            self.cache.tally(oracle, goal, islands, k)
        } else {
            crate::language::tally_votes(oracle, goal, islands, k)
        };
        match tally {
            Ok(t) => {
                self.abstentions += t.abstentions;
                shf_inject(&avm, islands, &t.h(), self.cfg.shf.eta)
            }
            Err(Error::Oracle(e)) => {
                log::warn!("{}: vote oracle failed, using distance scores only: {e}", self.scene.id);
                self.oracle_errors += 1;
                Ok(avm)
            }
            Err(e) => Err(e),
        }
    }

    /// Keeps the current island while an island with a nearby centroid
    /// still exists; otherwise draws a new one uniformly.
    fn random_pick(&mut self, islands: &[FrontierIsland], reps: &[Option<Cell>]) -> Option<usize> {
        let valid: Vec<usize> = (0..islands.len()).filter(|&k| reps[k].is_some()).collect();
        if valid.is_empty() {
            self.committed = None;
            return None;
        }
        if let Some(c) = self.committed {
            let nearest = valid
                .iter()
                .copied()
                .min_by(|&a, &b| islands[a].centroid.dist(c).total_cmp(&islands[b].centroid.dist(c)));
            if let Some(k) = nearest.filter(|&k| islands[k].centroid.dist(c) <= self.cfg.cluster.eps_m) {
                self.committed = Some(islands[k].centroid);
                return Some(k);
            }
        }
        let k = valid[self.rng.gen_range(0..valid.len())];
        self.committed = Some(islands[k].centroid);
        Some(k)
    }

    fn follow(
        &mut self,
        pose: &Pose,
        grid: &OccupancyGrid,
        aff: &ValueField,
        me: Cell,
        target: Cell,
    ) -> Result<Option<Action>> {
        if let Some(h) = self.recovery {
            if pose.heading != h {
                return Ok(Some(turn_toward(wrap_angle(h.radians() - pose.heading.radians()))));
            }
            self.recovery = None;
            if !self.forward_blocked(pose) {
                return Ok(Some(Action::Forward));
            }
        }
        let path = match plan_with(grid, aff, me, target, self.cfg.planner.c_min) {
            Ok(p) => p,
            Err(Error::NoPath { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut wps = waypoints(grid, pose.position(), &path, self.cfg.planner.max_waypoint_spacing_m);
        let action = next_action(pose, &mut wps);
        if action == Some(Action::Forward) && self.forward_blocked(pose) {
            // Clipping a known corner. Commit to the open heading whose step
            // ends geodesically closest to the target.
            let to_target = distance_field(grid, target);
            let dims = self.scene.dims;
            let best = (1..12)
                .map(|k| Heading::from_steps(pose.heading.steps() as i32 + k))
                .filter_map(|h| {
                    let probe = Pose::new(pose.x, pose.y, h);
                    if self.forward_blocked(&probe) {
                        return None;
                    }
                    let (ux, uy) = h.unit();
                    let end = dims.world_to_cell(pose.x + ux * FORWARD_STEP_M, pose.y + uy * FORWARD_STEP_M);
                    let d = if dims.contains(end) { to_target[dims.index(end)] } else { f64::INFINITY };
                    let turns = (h.steps() as i32 - pose.heading.steps() as i32).rem_euclid(12).min(
                        (pose.heading.steps() as i32 - h.steps() as i32).rem_euclid(12),
                    );
                    d.is_finite().then_some((d, turns, h))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.steps().cmp(&b.2.steps())));
            return Ok(Some(match best {
                Some((_, _, h)) => {
                    self.recovery = Some(h);
                    turn_toward(wrap_angle(h.radians() - pose.heading.radians()))
                }
                None => Action::TurnLeft,
            }));
        }
        Ok(action)
    }

    /// True when a forward move would run into a cell believed occupied.
    fn forward_blocked(&self, pose: &Pose) -> bool {
        let (ux, uy) = pose.heading.unit();
        CellWalk::new(self.scene.dims, pose.x, pose.y, ux, uy, FORWARD_STEP_M)
            .any(|(c, _)| self.belief.get(c) == CellState::Occupied)
    }

    fn goal_directed(&mut self, pose: &Pose, grid: &OccupancyGrid, dist: &[f64]) -> Result<Action> {
        let dims = self.scene.dims;
        let n = self.goal_points.len() as f64;
        let (sx, sy) = self.goal_points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        let goal = Point::new(sx / n, sy / n);
        let gc = goal_directed_target(&self.goal_points, dims)?;
        let half_fov = self.cfg.sensor.fov_deg.to_radians() / 2.0;
        let err = wrap_angle((goal.y - pose.y).atan2(goal.x - pose.x) - pose.heading.radians());
        if pose.position().dist(goal) <= SUCCESS_RADIUS_M && err.abs() > half_fov {
            return Ok(turn_toward(err));
        }
        let candidates: Vec<usize> = (0..dims.len()).filter(|&i| dist[i].is_finite()).collect();
        let Some(target) = nearest_candidate(&candidates, dims, dims_center(dims, gc)) else {
            return Ok(turn_toward(err));
        };
        let aff = ValueField::constant(dims, FieldKind::Affordance, 0.5);
        match self.follow(pose, grid, &aff, dims.world_to_cell(pose.x, pose.y), target)? {
            Some(a) => Ok(a),
            None => Ok(turn_toward(err)),
        }
    }
}

fn dims_center(dims: crate::grid::GridDims, c: Cell) -> Point {
    let (x, y) = dims.cell_center(c);
    Point::new(x, y)
}

fn turn_toward(err: f64) -> Action {
    if err >= 0.0 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Candidate cell closest to `p`; ties go to the lower row-major index.
fn nearest_candidate(candidates: &[usize], dims: crate::grid::GridDims, p: Point) -> Option<Cell> {
    candidates
        .iter()
        .map(|&i| {
            let (x, y) = dims.cell_center(dims.cell_at(i));
            (i, (x - p.x).powi(2) + (y - p.y).powi(2))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| dims.cell_at(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::test_util::{object, open_scene, set_wall};

    #[test]
    fn goal_visible_from_start_succeeds_quickly() {
        let mut scene = open_scene(80, 40);
        let d = scene.dims;
        scene.objects.push(object("sofa", 3.0, 1.0, &d));
        scene.start_pose = Pose::new(1.0, 1.0, Heading::default());
        let r = run_episode(&scene, SelectorMode::Dwfe, None, 1, &Config::default());
        assert!(r.success, "{r:?}");
        assert_eq!(r.goal_seen_step, Some(0));
        // 1.75 m to the success region: 9 forward moves plus stop.
        assert!(r.steps <= 12, "{}", r.steps);
        assert!(r.path_length_m <= 2.0);
    }

    #[test]
    fn unreachable_goal_region_aborts() {
        let mut scene = open_scene(80, 40);
        let d = scene.dims;
        set_wall(&mut scene, 40, 0, 41, 39);
        scene.objects.push(object("sofa", 3.0, 1.0, &d));
        scene.start_pose = Pose::new(1.0, 1.0, Heading::default());
        let r = run_episode(&scene, SelectorMode::Dwfe, None, 1, &Config::default());
        assert_eq!(r.outcome, Outcome::Aborted);
    }

    #[test]
    fn shf_without_oracle_aborts() {
        let mut scene = open_scene(80, 40);
        let d = scene.dims;
        scene.objects.push(object("sofa", 3.0, 1.0, &d));
        let r = run_episode(&scene, SelectorMode::Shf, None, 1, &Config::default());
        assert_eq!(r.outcome, Outcome::Aborted);
        assert!(!r.success);
    }

    #[test]
    fn random_baseline_draws_uniformly() {
        let mut scene = open_scene(80, 40);
        let d = scene.dims;
        scene.objects.push(object("sofa", 3.0, 1.0, &d));
        let cfg = Config::default();
        let mut agent = Agent::new(&scene, SelectorMode::RandomFrontier, None, 42, &cfg);
        let islands: Vec<FrontierIsland> = [(5, 5), (70, 30)]
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| FrontierIsland {
                id,
                cells: vec![Cell::new(x, y)],
                centroid: dims_center(d, Cell::new(x, y)),
                names: vec![],
            })
            .collect();
        let reps: Vec<Option<Cell>> = islands.iter().map(|f| Some(f.cells[0])).collect();
        let mut first = 0;
        for _ in 0..1000 {
            agent.committed = None;
            if agent.random_pick(&islands, &reps) == Some(0) {
                first += 1;
            }
        }
        let freq = first as f64 / 1000.0;
        assert!((freq - 0.5).abs() <= 0.05, "{freq}");
        let chi2 = 2.0 * (first as f64 - 500.0).powi(2) / 500.0;
        assert!(chi2 < 3.841, "chi-square {chi2}");
        // Once committed, the pick sticks while the island persists.
        let k = agent.random_pick(&islands, &reps);
        assert!((0..20).all(|_| agent.random_pick(&islands, &reps) == k));
    }

    #[test]
    fn explores_around_a_wall() {
        // Goal hidden behind a partition; start facing away from it.
        let mut scene = open_scene(120, 80);
        let d = scene.dims;
        set_wall(&mut scene, 60, 0, 61, 60);
        scene.objects.push(object("sofa", 4.5, 1.0, &d));
        scene.start_pose = Pose::new(1.0, 1.0, Heading::from_steps(6));
        for mode in [SelectorMode::Dwfe, SelectorMode::NearestFrontier, SelectorMode::RandomFrontier] {
            let r = run_episode(&scene, mode, None, 3, &Config::default());
            assert!(r.success, "{mode}: {:?} after {} steps", r.outcome, r.steps);
            assert!(r.steps <= 500);
        }
    }
}
