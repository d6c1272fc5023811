use super::jet::Jet;
use super::{Driver, FlowConfig, FlowError, FlowMap, FlowSpec, FlowValue};

/// State `(φ, ∂φ, ∂²φ)` carried by the sweeps.
type State = [f64; 3];

/// Right-hand side of the variational system for a field with jet `w`.
fn variational(w: &Jet, s: &State) -> State {
    [w.d[0], w.d[1] * s[1], w.d[2] * s[1] * s[1] + w.d[1] * s[2]]
}

fn rk4_step<F>(state: &State, h: f64, t0: f64, rhs: &F) -> State
where
    F: Fn(f64, &State) -> State,
{
    let add = |s: &State, k: &State, c: f64| [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2]];
    let k1 = rhs(t0, state);
    let k2 = rhs(t0 + 0.5 * h, &add(state, &k1, 0.5 * h));
    let k3 = rhs(t0 + 0.5 * h, &add(state, &k2, 0.5 * h));
    let k4 = rhs(t0 + h, &add(state, &k3, h));
    let mut out = *state;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Lie-algebra coordinates of one reversed cell, folded onto bracket pairs.
#[derive(Clone, Debug)]
struct CellField {
    level1: Vec<f64>,
    /// `(i, j, c)` with `i < j`: coefficient of `[G_i, G_j]`.
    level2: Vec<(usize, usize, f64)>,
    /// `(i, j, k, c)` with `i < j`: coefficient of `[[G_i, G_j], G_k]`.
    level3: Vec<(usize, usize, usize, f64)>,
}

impl CellField {
    fn from_increment(inc: &crate::rough_path::GroupIncrement) -> Self {
        let log = inc.word_reversed().log();
        let d = log.dim;
        let mut level2 = Vec::new();
        let mut level3 = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let c = 0.5 * (log.level2[i * d + j] - log.level2[j * d + i]);
                if c != 0.0 {
                    level2.push((i, j, c));
                }
                if let Some(l3) = &log.level3 {
                    for k in 0..d {
                        let c = (l3[(i * d + j) * d + k] - l3[(j * d + i) * d + k]) / 3.0;
                        if c != 0.0 {
                            level3.push((i, j, k, c));
                        }
                    }
                }
            }
        }
        Self {
            level1: log.level1,
            level2,
            level3,
        }
    }

    fn jet(&self, spec: &FlowSpec, z: f64) -> Jet {
        let order = if !self.level3.is_empty() {
            4
        } else if !self.level2.is_empty() {
            3
        } else {
            2
        };
        let jets: Vec<Jet> = spec.fields().iter().map(|g| g.jet(z, order)).collect();
        let mut w = Jet::zero(2);
        for (g, c) in jets.iter().zip(&self.level1) {
            if *c != 0.0 {
                w.axpy(*c, g);
            }
        }
        for &(i, j, c) in &self.level2 {
            w.axpy(c, &jets[i].bracket(&jets[j]));
        }
        for &(i, j, k, c) in &self.level3 {
            w.axpy(c, &jets[i].bracket(&jets[j]).bracket(&jets[k]));
        }
        w.order = 2;
        w
    }
}

/// A flow ready for repeated evaluation; rough drivers have their cell
/// generators precomputed.
#[derive(Clone, Debug)]
pub struct Flow {
    spec: FlowSpec,
    config: FlowConfig,
    cells: Vec<CellField>,
}

impl Flow {
    pub fn new(spec: FlowSpec, config: FlowConfig) -> Result<Self, FlowError> {
        if config.steps == 0 || config.inner_steps == 0 {
            return Err(FlowError::InvalidSteps);
        }
        let cells = match spec.driver() {
            Driver::Rough(path) => path.increments().iter().map(CellField::from_increment).collect(),
            Driver::Smooth(_) => Vec::new(),
        };
        Ok(Self { spec, config, cells })
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn solve(&self, t: f64, y: f64) -> Result<FlowValue, FlowError> {
        Ok(self.trajectory(y, &[t])?[0])
    }

    /// Flow values at each of `times` (any order) for one starting point `y`,
    /// computed in a single backward sweep.
    pub fn trajectory(&self, y: f64, times: &[f64]) -> Result<Vec<FlowValue>, FlowError> {
        let horizon = self.spec.horizon();
        for &t in times {
            if !(0.0..=horizon).contains(&t) {
                return Err(FlowError::TimeOutOfRange { t, horizon });
            }
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
        let mut out = vec![FlowValue::identity(horizon, y); times.len()];
        if self.spec.is_identity() {
            for (o, &t) in out.iter_mut().zip(times) {
                *o = FlowValue::identity(t, y);
            }
            return Ok(out);
        }
        match self.spec.driver() {
            Driver::Smooth(_) => self.sweep_ode(y, times, &order, &mut out)?,
            Driver::Rough(_) => self.sweep_rde(y, times, &order, &mut out)?,
        }
        Ok(out)
    }

    pub(super) fn check(&self, t: f64, s: &State) -> Result<(), FlowError> {
        if !(s[0].abs() <= self.config.guard) {
            return Err(FlowError::Explosion {
                t,
                value: s[0],
                guard: self.config.guard,
            });
        }
        if !(s[1] > 0.0) || !s[2].is_finite() {
            return Err(FlowError::Positivity { t, dphi: s[1] });
        }
        Ok(())
    }

    fn sweep_ode(&self, y: f64, times: &[f64], order: &[usize], out: &mut [FlowValue]) -> Result<(), FlowError> {
        let Driver::Smooth(path) = self.spec.driver() else {
            unreachable!()
        };
        let horizon = path.horizon();
        let h = horizon / self.config.steps as f64;
        let tol = 1e-12 * horizon.max(1.0);
        let fields = self.spec.fields();
        let mut state: State = [y, 1.0, 0.0];
        let mut current = horizon;
        for &idx in order {
            let target = times[idx];
            if target < current {
                // interior nodes of (target, current): uniform grid and kinks
                let mut nodes: Vec<f64> = (1..self.config.steps)
                    .map(|k| k as f64 * h)
                    .chain(path.breakpoints().iter().copied())
                    .filter(|&s| s > target + tol && s < current - tol)
                    .collect();
                nodes.sort_by(|a, b| b.total_cmp(a));
                nodes.dedup_by(|a, b| (*a - *b).abs() <= tol);
                nodes.push(target);
                for &lo in &nodes {
                    let hi = current;
                    // reversed time r runs from hi down to lo
                    let rhs = |s: f64, st: &State| {
                        let v = path.velocity_on(s, lo, hi);
                        let mut w = Jet::zero(2);
                        for (g, vk) in fields.iter().zip(&v) {
                            if *vk != 0.0 {
                                w.axpy(*vk, &g.jet(st[0], 2));
                            }
                        }
                        variational(&w, st)
                    };
                    state = rk4_step(&state, hi - lo, 0.0, &|r, st| rhs(hi - r, st));
                    self.check(lo, &state)?;
                    current = lo;
                }
            }
            out[idx] = if target >= horizon {
                FlowValue::identity(target, y)
            } else {
                FlowValue {
                    t: target,
                    y,
                    phi: state[0],
                    dphi: state[1],
                    d2phi: state[2],
                }
            };
        }
        Ok(())
    }

    fn sweep_rde(&self, y: f64, times: &[f64], order: &[usize], out: &mut [FlowValue]) -> Result<(), FlowError> {
        let Driver::Rough(path) = self.spec.driver() else {
            unreachable!()
        };
        let grid = path.times();
        let mut nodes = Vec::with_capacity(order.len());
        for &idx in order {
            let t = times[idx];
            let node = path.node_index(t).ok_or(FlowError::OffGrid { t })?;
            nodes.push(node);
        }
        let h = 1.0 / self.config.inner_steps as f64;
        let mut state: State = [y, 1.0, 0.0];
        let mut cell = path.n_cells();
        for (&idx, &node) in order.iter().zip(&nodes) {
            while cell > node {
                cell -= 1;
                let field = &self.cells[cell];
                let rhs = |_: f64, st: &State| variational(&field.jet(&self.spec, st[0]), st);
                for _ in 0..self.config.inner_steps {
                    state = rk4_step(&state, h, 0.0, &rhs);
                }
                self.check(grid[cell], &state)?;
            }
            out[idx] = if node == path.n_cells() {
                FlowValue::identity(times[idx], y)
            } else {
                FlowValue {
                    t: times[idx],
                    y,
                    phi: state[0],
                    dphi: state[1],
                    d2phi: state[2],
                }
            };
        }
        Ok(())
    }
}

impl FlowMap for Flow {
    fn horizon(&self) -> f64 {
        self.spec.horizon()
    }

    fn value(&self, t: f64, y: f64) -> Result<FlowValue, FlowError> {
        self.solve(t, y)
    }

    fn is_identity(&self) -> bool {
        self.spec.is_identity()
    }
}

pub fn solve_ode_flow(spec: &FlowSpec, config: FlowConfig, t: f64, y: f64) -> Result<FlowValue, FlowError> {
    if !matches!(spec.driver(), Driver::Smooth(_)) {
        return Err(FlowError::DriverMismatch { expected: "smooth" });
    }
    Flow::new(spec.clone(), config)?.solve(t, y)
}

pub fn solve_rde_flow(spec: &FlowSpec, config: FlowConfig, t: f64, y: f64) -> Result<FlowValue, FlowError> {
    if !matches!(spec.driver(), Driver::Rough(_)) {
        return Err(FlowError::DriverMismatch { expected: "rough" });
    }
    Flow::new(spec.clone(), config)?.solve(t, y)
}
