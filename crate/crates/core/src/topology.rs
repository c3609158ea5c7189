//! Streamline topology of divergence-free channel fields: singular points,
//! boundary saddles of no-slip walls, separatrix connections, structural
//! stability and the pure-roll / meander regime labels.

use crate::bc::{BoundaryCondition, SpaceTag, Wall, WallKind};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operators::VelocityPart;

/// A velocity field on the channel (periodic in x1 with the given period,
/// walls at x2 = 0 and 1) that topology analysis can probe pointwise.
pub trait FlowField: Sync {
    fn period(&self) -> f64;
    fn velocity(&self, x1: f64, x2: f64) -> [f64; 2];

    fn jacobian(&self, x1: f64, x2: f64) -> [[f64; 2]; 2] {
        let h = 1e-6 * self.period().max(1.0);
        let up1 = self.velocity(x1 + h, x2);
        let um1 = self.velocity(x1 - h, x2);
        let up2 = self.velocity(x1, x2 + h);
        let um2 = self.velocity(x1, x2 - h);
        [
            [(up1[0] - um1[0]) / (2.0 * h), (up2[0] - um2[0]) / (2.0 * h)],
            [(up1[1] - um1[1]) / (2.0 * h), (up2[1] - um2[1]) / (2.0 * h)],
        ]
    }

    /// d2u[i][a][b] = second partial of component i by x_a, x_b.
    fn second_partials(&self, x1: f64, x2: f64) -> [[[f64; 2]; 2]; 2] {
        let h = 1e-5 * self.period().max(1.0);
        let jp1 = self.jacobian(x1 + h, x2);
        let jm1 = self.jacobian(x1 - h, x2);
        let jp2 = self.jacobian(x1, x2 + h);
        let jm2 = self.jacobian(x1, x2 - h);
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for b in 0..2 {
                out[i][0][b] = (jp1[i][b] - jm1[i][b]) / (2.0 * h);
                out[i][1][b] = (jp2[i][b] - jm2[i][b]) / (2.0 * h);
            }
        }
        out
    }

    /// Magnitude scale of the field (used for zero tolerances).
    fn velocity_scale(&self) -> f64 {
        let mut m = 0.0f64;
        let l = self.period();
        for i in 0..24 {
            for j in 0..17 {
                let u = self.velocity(l * i as f64 / 24.0, j as f64 / 16.0);
                m = m.max(u[0].abs()).max(u[1].abs());
            }
        }
        m
    }

    /// Net horizontal momentum int int u1 dx.
    fn mean_flow(&self) -> f64 {
        // trapezoid in x1 (periodic), Simpson in x2
        let l = self.period();
        let (n1, n2) = (48, 65);
        let mut total = 0.0;
        for i in 0..n1 {
            let x1 = l * i as f64 / n1 as f64;
            let mut col = 0.0;
            for j in 0..n2 {
                let x2 = j as f64 / (n2 - 1) as f64;
                let w = if j == 0 || j == n2 - 1 {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                col += w * self.velocity(x1, x2)[0];
            }
            total += col / (3.0 * (n2 - 1) as f64);
        }
        total * l / n1 as f64
    }
}

impl FlowField for SpectralField {
    fn period(&self) -> f64 {
        self.basis().period
    }

    fn velocity(&self, x1: f64, x2: f64) -> [f64; 2] {
        let v = self.eval(x1, x2);
        [v.u1, v.u2]
    }

    fn jacobian(&self, x1: f64, x2: f64) -> [[f64; 2]; 2] {
        self.velocity_derivatives(x1, x2).1
    }

    fn second_partials(&self, x1: f64, x2: f64) -> [[[f64; 2]; 2]; 2] {
        self.velocity_derivatives(x1, x2).2
    }

    fn mean_flow(&self) -> f64 {
        SpectralField::mean_flow(self)
    }
}

impl FlowField for VelocityPart {
    fn period(&self) -> f64 {
        self.basis().period
    }

    fn velocity(&self, x1: f64, x2: f64) -> [f64; 2] {
        VelocityPart::velocity(self, x1, x2)
    }
}

/// Closed-form test fields: velocity closure plus optional analytic
/// derivatives (finite differences otherwise).
pub struct AnalyticField<F: Fn(f64, f64) -> [f64; 2] + Sync> {
    pub period: f64,
    pub velocity: F,
}

impl<F: Fn(f64, f64) -> [f64; 2] + Sync> FlowField for AnalyticField<F> {
    fn period(&self) -> f64 {
        self.period
    }
    fn velocity(&self, x1: f64, x2: f64) -> [f64; 2] {
        (self.velocity)(x1, x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Center,
    InteriorSaddle,
    /// Wall saddle: a nondegenerate zero of the wall-normal shear on a
    /// no-slip wall, or an ordinary saddle sitting on a free wall.
    BoundarySaddle,
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct SingularPoint {
    pub location: [f64; 2],
    pub kind: PointKind,
    /// Interior points: det Du. No-slip wall points: the second-derivative
    /// determinant of the boundary nondegeneracy test. Free-wall points:
    /// det Du on the wall.
    pub jacobian_det: f64,
    pub wall: Option<Wall>,
    /// |u| at the point after polishing (interior) or the magnitude of the
    /// wall functional at the located zero.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SeparatrixEdge {
    /// Index into the saddle list of the graph.
    pub from: usize,
    /// None while unresolved.
    pub to: Option<usize>,
    pub cross_channel: bool,
    /// Arc-length parametrized polyline, oriented along the flow.
    pub polyline: Vec<[f64; 2]>,
    pub resolved: bool,
    /// Whether the trace ran along the flow (+) or against it (-); the
    /// polyline is already stored flow-oriented.
    pub forward: bool,
}

#[derive(Debug, Clone)]
pub struct ConnectionGraph {
    pub saddles: Vec<SingularPoint>,
    pub edges: Vec<SeparatrixEdge>,
}

impl ConnectionGraph {
    pub fn cross_channel_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.resolved && e.cross_channel)
            .count()
    }

    pub fn unresolved_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.resolved).count()
    }

    /// True when every resolved edge of the interior saddle `i` returns to
    /// itself.
    pub fn self_connected(&self, i: usize) -> bool {
        let mut any = false;
        for e in &self.edges {
            if e.from == i || e.to == Some(i) {
                if !e.resolved {
                    return false;
                }
                if !(e.from == i && e.to == Some(i)) {
                    return false;
                }
                any = true;
            }
        }
        any
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PureRolls,
    /// Meander with negative net horizontal momentum.
    MeanderA,
    /// Meander with positive net horizontal momentum.
    MeanderB,
    Degenerate,
    Other,
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub stable: Option<bool>,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TopologyReport {
    pub points: Vec<SingularPoint>,
    pub graph: ConnectionGraph,
    pub d_regular: bool,
    pub d_regular_witnesses: Vec<String>,
    pub structurally_stable: Option<bool>,
    pub stability_reasons: Vec<String>,
    pub space_tag: SpaceTag,
    pub regime: Regime,
    pub mean_flow: f64,
    pub mean_flow_sign: i8,
}

#[derive(Debug, Clone)]
pub struct TopologyOptions {
    /// Screening grid for interior zeros.
    pub grid: (usize, usize),
    /// Zero tolerance relative to the velocity scale.
    pub zero_tol: f64,
    /// Merge radius as a fraction of the period.
    pub merge_frac: f64,
    /// Degeneracy threshold for determinants, relative to natural scales.
    pub degenerate_tol: f64,
    /// Capture radius for separatrix endpoints (absolute).
    pub capture_radius: f64,
    /// Arc-length budget per separatrix.
    pub max_arc_length: f64,
    /// |M| below mean_flow_tol * scale * period counts as zero.
    pub mean_flow_tol: f64,
    /// Velocity scale below which the whole field is Degenerate.
    pub noise_floor: f64,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        TopologyOptions {
            grid: (96, 48),
            zero_tol: 1e-10,
            merge_frac: 1e-3,
            degenerate_tol: 1e-8,
            capture_radius: 0.008,
            max_arc_length: 60.0,
            mean_flow_tol: 1e-8,
            noise_floor: 1e-10,
        }
    }
}

fn wrap_x1(x: f64, l: f64) -> f64 {
    let mut v = x % l;
    if v < 0.0 {
        v += l;
    }
    v
}

fn periodic_dist(a: [f64; 2], b: [f64; 2], l: f64) -> f64 {
    let mut dx = (a[0] - b[0]).abs() % l;
    if dx > l / 2.0 {
        dx = l - dx;
    }
    (dx * dx + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
}

/// Locate and classify interior zeros of the velocity by cell screening and
/// damped Newton polish.
pub fn find_interior_singularities(
    field: &dyn FlowField,
    opts: &TopologyOptions,
) -> Result<Vec<SingularPoint>> {
    let l = field.period();
    let scale = field.velocity_scale();
    if scale <= opts.noise_floor {
        return Err(Error::InvalidParam(format!(
            "velocity scale {scale:.3e} is below the noise floor; every point is degenerate"
        )));
    }
    let (n1, n2) = opts.grid;
    let mut u1g = vec![0.0; n1 * (n2 + 1)];
    let mut u2g = vec![0.0; n1 * (n2 + 1)];
    for i in 0..n1 {
        for j in 0..=n2 {
            let u = field.velocity(l * i as f64 / n1 as f64, j as f64 / n2 as f64);
            u1g[i * (n2 + 1) + j] = u[0];
            u2g[i * (n2 + 1) + j] = u[1];
        }
    }
    let mut found: Vec<SingularPoint> = Vec::new();
    let merge_r = opts.merge_frac * l;
    for i in 0..n1 {
        let ip = (i + 1) % n1;
        for j in 0..n2 {
            // skip cells hugging the walls; wall analysis handles them
            let corners = [
                (i, j),
                (ip, j),
                (i, j + 1),
                (ip, j + 1),
            ];
            let vals1: Vec<f64> = corners.iter().map(|&(a, b)| u1g[a * (n2 + 1) + b]).collect();
            let vals2: Vec<f64> = corners.iter().map(|&(a, b)| u2g[a * (n2 + 1) + b]).collect();
            let var1 = vals1.iter().any(|&v| v > 0.0) && vals1.iter().any(|&v| v < 0.0);
            let var2 = vals2.iter().any(|&v| v > 0.0) && vals2.iter().any(|&v| v < 0.0);
            // tiny corner values also count as sign variation
            let tiny = 1e-9 * scale;
            let var1 = var1 || vals1.iter().any(|&v| v.abs() < tiny);
            let var2 = var2 || vals2.iter().any(|&v| v.abs() < tiny);
            if !(var1 && var2) {
                continue;
            }
            let x0 = [
                l * (i as f64 + 0.5) / n1 as f64,
                (j as f64 + 0.5) / n2 as f64,
            ];
            if let Some(p) = newton_polish(field, x0, opts, scale) {
                // a no-slip wall is singular everywhere; leave anything
                // within a quarter cell of a wall to the boundary analysis
                let wall_margin = 0.25 / n2 as f64;
                if p.location[1] < wall_margin || p.location[1] > 1.0 - wall_margin {
                    continue;
                }
                if found
                    .iter()
                    .all(|q| periodic_dist(p.location, q.location, l) > merge_r)
                {
                    found.push(p);
                }
            }
        }
    }
    found.sort_by(|a, b| {
        a.location[0]
            .partial_cmp(&b.location[0])
            .unwrap()
            .then(a.location[1].partial_cmp(&b.location[1]).unwrap())
    });
    Ok(found)
}

fn newton_polish(
    field: &dyn FlowField,
    start: [f64; 2],
    opts: &TopologyOptions,
    scale: f64,
) -> Option<SingularPoint> {
    let l = field.period();
    let mut x = start;
    let tol = opts.zero_tol * scale;
    let mut last_norm = f64::INFINITY;
    for _ in 0..60 {
        let u = field.velocity(x[0], x[1]);
        let norm = u[0].hypot(u[1]);
        if norm <= tol {
            return Some(classify_interior(field, x, opts, scale, norm));
        }
        let jac = field.jacobian(x[0], x[1]);
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let mut dx = [
            -(jac[1][1] * u[0] - jac[0][1] * u[1]) / det,
            -(-jac[1][0] * u[0] + jac[0][0] * u[1]) / det,
        ];
        // damping and clamping
        let step = dx[0].hypot(dx[1]);
        let cap = 0.25 * l.min(1.0);
        if step > cap {
            dx[0] *= cap / step;
            dx[1] *= cap / step;
        }
        if norm > last_norm {
            dx[0] *= 0.5;
            dx[1] *= 0.5;
        }
        last_norm = norm;
        x[0] = wrap_x1(x[0] + dx[0], l);
        x[1] = (x[1] + dx[1]).clamp(1e-9, 1.0 - 1e-9);
    }
    let u = field.velocity(x[0], x[1]);
    let norm = u[0].hypot(u[1]);
    if norm <= tol.sqrt() * scale.sqrt() {
        // converged poorly: report as a degenerate candidate
        return Some(SingularPoint {
            location: x,
            kind: PointKind::Degenerate,
            jacobian_det: 0.0,
            wall: None,
            residual: norm,
        });
    }
    None
}

fn classify_interior(
    field: &dyn FlowField,
    x: [f64; 2],
    opts: &TopologyOptions,
    scale: f64,
    residual: f64,
) -> SingularPoint {
    let jac = field.jacobian(x[0], x[1]);
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let det_scale = (scale / field.period().min(1.0)).powi(2);
    let kind = if det > opts.degenerate_tol * det_scale {
        PointKind::Center
    } else if det < -opts.degenerate_tol * det_scale {
        PointKind::InteriorSaddle
    } else {
        PointKind::Degenerate
    };
    SingularPoint {
        location: x,
        kind,
        jacobian_det: det,
        wall: None,
        residual,
    }
}

/// Wall singular points. On no-slip walls these are the zeros of the
/// wall-normal derivative of the tangential velocity, classified by the
/// second-derivative determinant; on free walls they are ordinary zeros of
/// the tangential velocity, saddles whenever nondegenerate.
pub fn find_boundary_singularities(
    field: &dyn FlowField,
    bc: BoundaryCondition,
    opts: &TopologyOptions,
) -> Result<Vec<SingularPoint>> {
    let l = field.period();
    let scale = field.velocity_scale();
    if scale <= opts.noise_floor {
        return Err(Error::InvalidParam(
            "velocity scale below the noise floor".into(),
        ));
    }
    let mut out = Vec::new();
    for (wall, x2) in [(Wall::Bottom, 0.0), (Wall::Top, 1.0)] {
        let kind = bc.wall(wall);
        let f = |x1: f64| -> f64 {
            match kind {
                WallKind::Rigid => field.jacobian(x1, x2)[0][1], // d u1 / d x2
                WallKind::Free => field.velocity(x1, x2)[0],
            }
        };
        let n = 512;
        let vals: Vec<f64> = (0..n).map(|i| f(l * i as f64 / n as f64)).collect();
        let fscale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if fscale == 0.0 {
            continue;
        }
        for i in 0..n {
            let a = vals[i];
            let b = vals[(i + 1) % n];
            if a == 0.0 || a * b >= 0.0 {
                continue;
            }
            // bisection
            let mut lo = l * i as f64 / n as f64;
            let mut hi = l * (i + 1) as f64 / n as f64;
            let mut flo = a;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if (hi - lo) < 1e-13 * l {
                    break;
                }
            }
            let x1 = wrap_x1(0.5 * (lo + hi), l);
            let (det, kind_out) = match kind {
                WallKind::Rigid => {
                    let d2 = field.second_partials(x1, x2);
                    // [d2u_tau/(d tau d n), d2u_tau/d n^2; d2u_n/(d tau d n), d2u_n/d n^2]
                    let det =
                        d2[0][0][1] * d2[1][1][1] - d2[0][1][1] * d2[1][0][1];
                    let det_scale = (scale / l.min(1.0)).powi(2) / l.min(1.0);
                    let k = if det.abs() > opts.degenerate_tol * det_scale {
                        PointKind::BoundarySaddle
                    } else {
                        PointKind::Degenerate
                    };
                    (det, k)
                }
                WallKind::Free => {
                    let jac = field.jacobian(x1, x2);
                    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                    let det_scale = (scale / l.min(1.0)).powi(2);
                    let k = if det.abs() > opts.degenerate_tol * det_scale {
                        PointKind::BoundarySaddle
                    } else {
                        PointKind::Degenerate
                    };
                    (det, k)
                }
            };
            out.push(SingularPoint {
                location: [x1, x2],
                kind: kind_out,
                jacobian_det: det,
                wall: Some(wall),
                residual: f(x1).abs(),
            });
        }
    }
    out.sort_by(|a, b| {
        a.location[1]
            .partial_cmp(&b.location[1])
            .unwrap()
            .then(a.location[0].partial_cmp(&b.location[0]).unwrap())
    });
    Ok(out)
}

/// D-regularity: all interior singular points and all wall singular points
/// nondegenerate. Returns the verdict with witnesses naming any failures.
pub fn d_regularity(
    interior: &[SingularPoint],
    boundary: &[SingularPoint],
) -> (bool, Vec<String>) {
    let mut witnesses = Vec::new();
    for p in interior.iter().chain(boundary) {
        if p.kind == PointKind::Degenerate {
            witnesses.push(format!(
                "degenerate singular point at ({:.6}, {:.6}){}",
                p.location[0],
                p.location[1],
                match p.wall {
                    Some(Wall::Bottom) => " on the bottom wall",
                    Some(Wall::Top) => " on the top wall",
                    None => "",
                }
            ));
        }
    }
    (witnesses.is_empty(), witnesses)
}

/// Trace separatrices from every saddle and assemble the connection graph.
pub fn separatrix_graph(
    field: &dyn FlowField,
    saddles: &[SingularPoint],
    bc: BoundaryCondition,
    opts: &TopologyOptions,
) -> ConnectionGraph {
    let l = field.period();
    let scale = field.velocity_scale();
    let mut edges = Vec::new();
    for (si, s) in saddles.iter().enumerate() {
        match s.kind {
            PointKind::InteriorSaddle => {
                let jac = field.jacobian(s.location[0], s.location[1]);
                // unstable eigendirection (positive eigenvalue)
                if let Some((dir, _)) = saddle_directions(jac) {
                    for sign in [1.0, -1.0] {
                        let start = [
                            s.location[0] + sign * dir[0] * 2e-4 * l.min(1.0),
                            s.location[1] + sign * dir[1] * 2e-4 * l.min(1.0),
                        ];
                        edges.push(trace_separatrix(
                            field, saddles, si, start, true, opts, scale,
                        ));
                    }
                }
            }
            PointKind::BoundarySaddle => {
                let wall = s.wall.expect("boundary saddle carries its wall");
                let into = match wall {
                    Wall::Bottom => 1.0,
                    Wall::Top => -1.0,
                };
                let eps = 2e-3;
                let start = match bc.wall(wall) {
                    WallKind::Rigid => [s.location[0], s.location[1] + into * eps],
                    WallKind::Free => {
                        // transversal eigendirection of the wall saddle
                        let jac = field.jacobian(s.location[0], s.location[1]);
                        let v = [-jac[0][1], 2.0 * jac[0][0]];
                        let n = v[0].hypot(v[1]).max(1e-300);
                        let sgn = if v[1] * into > 0.0 { 1.0 } else { -1.0 };
                        [
                            s.location[0] + sgn * v[0] / n * eps,
                            s.location[1] + sgn * v[1] / n * eps,
                        ]
                    }
                };
                // follow the curve away from the wall whichever way the
                // flow runs through it
                let u = field.velocity(start[0], start[1]);
                let forward = u[1] * into >= 0.0;
                edges.push(trace_separatrix(
                    field, saddles, si, start, forward, opts, scale,
                ));
            }
            _ => {}
        }
    }
    ConnectionGraph {
        saddles: saddles.to_vec(),
        edges,
    }
}

fn saddle_directions(jac: [[f64; 2]; 2]) -> Option<([f64; 2], f64)> {
    // divergence-free: eigenvalues +/- sqrt(-det)
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det >= 0.0 {
        return None;
    }
    let mu = (-det).sqrt();
    // (J - mu I) v = 0
    let a = jac[0][0] - mu;
    let b = jac[0][1];
    let c = jac[1][0];
    let d = jac[1][1] - mu;
    let v = if b.abs() + a.abs() > c.abs() + d.abs() {
        [-b, a]
    } else {
        [-d, c]
    };
    let n = v[0].hypot(v[1]);
    if n == 0.0 {
        return None;
    }
    Some(([v[0] / n, v[1] / n], mu))
}

fn trace_separatrix(
    field: &dyn FlowField,
    saddles: &[SingularPoint],
    source: usize,
    start: [f64; 2],
    forward: bool,
    opts: &TopologyOptions,
    scale: f64,
) -> SeparatrixEdge {
    let l = field.period();
    let sgn = if forward { 1.0 } else { -1.0 };
    let dir_at = |x: [f64; 2]| -> Option<[f64; 2]> {
        let u = field.velocity(x[0], x[1]);
        let n = u[0].hypot(u[1]);
        if n < 1e-14 * scale {
            return None;
        }
        Some([sgn * u[0] / n, sgn * u[1] / n])
    };
    let ds_base = l.min(1.0) / 600.0;
    let mut x = start;
    let mut poly = vec![start];
    let mut arc = 0.0;
    let mut to = None;
    let mut resolved = false;
    while arc < opts.max_arc_length {
        // adaptive step: slow down where the field is weak
        let u = field.velocity(x[0], x[1]);
        let speed = u[0].hypot(u[1]);
        let ds = ds_base * (speed / scale).clamp(0.02, 1.0);
        // RK4 on the unit-speed field
        let k1 = match dir_at(x) {
            Some(d) => d,
            None => break,
        };
        let mid1 = [x[0] + 0.5 * ds * k1[0], (x[1] + 0.5 * ds * k1[1]).clamp(0.0, 1.0)];
        let k2 = match dir_at(mid1) {
            Some(d) => d,
            None => break,
        };
        let mid2 = [x[0] + 0.5 * ds * k2[0], (x[1] + 0.5 * ds * k2[1]).clamp(0.0, 1.0)];
        let k3 = match dir_at(mid2) {
            Some(d) => d,
            None => break,
        };
        let end = [x[0] + ds * k3[0], (x[1] + ds * k3[1]).clamp(0.0, 1.0)];
        let k4 = match dir_at(end) {
            Some(d) => d,
            None => break,
        };
        x = [
            wrap_x1(
                x[0] + ds / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                l,
            ),
            (x[1] + ds / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])).clamp(0.0, 1.0),
        ];
        arc += ds;
        poly.push(x);
        // capture by any saddle (the source only after leaving its vicinity)
        for (ti, t) in saddles.iter().enumerate() {
            if t.kind == PointKind::Degenerate || t.kind == PointKind::Center {
                continue;
            }
            let d = periodic_dist(x, t.location, l);
            if d < opts.capture_radius {
                let far_enough = ti != source || arc > 6.0 * opts.capture_radius;
                if far_enough {
                    to = Some(ti);
                    resolved = true;
                    poly.push(t.location);
                    break;
                }
            }
        }
        if resolved {
            break;
        }
    }
    let cross_channel = match (saddles[source].wall, to.and_then(|t| saddles[t].wall)) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    };
    if !forward {
        poly.reverse();
    }
    SeparatrixEdge {
        from: source,
        to,
        cross_channel,
        polyline: poly,
        resolved,
        forward,
    }
}

/// Integrate a streamline from `start` for at most `arc_length`, oriented
/// along the flow; used by the renderer and the tracing tests.
pub fn streamline(
    field: &dyn FlowField,
    start: [f64; 2],
    arc_length: f64,
    forward: bool,
) -> Vec<[f64; 2]> {
    let l = field.period();
    let scale = field.velocity_scale().max(1e-300);
    let sgn = if forward { 1.0 } else { -1.0 };
    let ds = l.min(1.0) / 400.0;
    let mut x = start;
    let mut poly = vec![start];
    let mut arc = 0.0;
    while arc < arc_length {
        let u = field.velocity(x[0], x[1]);
        let n = u[0].hypot(u[1]);
        if n < 1e-10 * scale {
            break;
        }
        let d = [sgn * u[0] / n, sgn * u[1] / n];
        let mid = [
            wrap_x1(x[0] + 0.5 * ds * d[0], l),
            (x[1] + 0.5 * ds * d[1]).clamp(0.0, 1.0),
        ];
        let um = field.velocity(mid[0], mid[1]);
        let nm = um[0].hypot(um[1]);
        if nm < 1e-10 * scale {
            break;
        }
        let dm = [sgn * um[0] / nm, sgn * um[1] / nm];
        x = [
            wrap_x1(x[0] + ds * dm[0], l),
            (x[1] + ds * dm[1]).clamp(0.0, 1.0),
        ];
        poly.push(x);
        arc += ds;
    }
    poly
}

/// Structural stability in the perturbation space `space_tag`:
/// (1) regularity of the singular points, (2) interior saddles
/// self-connected, (3) wall-saddle connections stay on one wall, except in
/// the zero-mean free-free space where wall-to-wall connections cannot be
/// broken. Unresolved separatrices make the verdict unknown.
pub fn structural_stability(
    report_points: (&[SingularPoint], &[SingularPoint]),
    graph: &ConnectionGraph,
    space_tag: SpaceTag,
) -> StabilityVerdict {
    let (interior, boundary) = report_points;
    let mut reasons = Vec::new();

    let (regular, mut witnesses) = d_regularity(interior, boundary);
    if !regular {
        reasons.append(&mut witnesses);
    }

    if graph.unresolved_edges() > 0 {
        return StabilityVerdict {
            stable: None,
            reasons: vec![format!(
                "{} separatrices exceeded the tracing budget; verdict unknown",
                graph.unresolved_edges()
            )],
        };
    }

    // interior self-connections
    let mut interior_ok = true;
    for (i, s) in graph.saddles.iter().enumerate() {
        if s.kind == PointKind::InteriorSaddle && !graph.self_connected(i) {
            interior_ok = false;
            reasons.push(format!(
                "interior saddle at ({:.4}, {:.4}) is not self-connected",
                s.location[0], s.location[1]
            ));
        }
    }

    // wall-saddle connection rule
    let mut walls_ok = true;
    for e in &graph.edges {
        let from_wall = graph.saddles[e.from].wall;
        let to_wall = e.to.and_then(|t| graph.saddles[t].wall);
        if from_wall.is_none() {
            continue;
        }
        match (to_wall, e.cross_channel) {
            (Some(_), false) => {}
            (Some(_), true) => {
                if space_tag != SpaceTag::B3 {
                    walls_ok = false;
                    reasons.push(format!(
                        "wall saddle at ({:.4}, {:.4}) connects across the channel",
                        graph.saddles[e.from].location[0], graph.saddles[e.from].location[1]
                    ));
                }
            }
            (None, _) => {
                walls_ok = false;
                reasons.push(format!(
                    "wall saddle at ({:.4}, {:.4}) connects to an interior saddle",
                    graph.saddles[e.from].location[0], graph.saddles[e.from].location[1]
                ));
            }
        }
    }

    let stable = regular && interior_ok && walls_ok;
    if stable && reasons.is_empty() {
        reasons.push("regular singular points, interior saddles self-connected, wall connections admissible".into());
    }
    StabilityVerdict {
        stable: Some(stable),
        reasons,
    }
}

/// Full classification pipeline.
pub fn classify_regime(
    field: &dyn FlowField,
    bc: BoundaryCondition,
    opts: &TopologyOptions,
) -> Result<TopologyReport> {
    let scale = field.velocity_scale();
    let l = field.period();
    if scale <= opts.noise_floor {
        return Ok(TopologyReport {
            points: Vec::new(),
            graph: ConnectionGraph {
                saddles: Vec::new(),
                edges: Vec::new(),
            },
            d_regular: false,
            d_regular_witnesses: vec!["field below the noise floor".into()],
            structurally_stable: None,
            stability_reasons: vec!["field below the noise floor".into()],
            space_tag: bc.space_tag,
            regime: Regime::Degenerate,
            mean_flow: 0.0,
            mean_flow_sign: 0,
        });
    }
    let interior = find_interior_singularities(field, opts)?;
    let boundary = find_boundary_singularities(field, bc, opts)?;
    let saddles: Vec<SingularPoint> = interior
        .iter()
        .filter(|p| p.kind == PointKind::InteriorSaddle)
        .chain(boundary.iter())
        .cloned()
        .collect();
    let graph = separatrix_graph(field, &saddles, bc, opts);
    let (d_regular, d_regular_witnesses) = d_regularity(&interior, &boundary);
    let verdict = structural_stability((&interior, &boundary), &graph, bc.space_tag);

    let m = field.mean_flow();
    let m_zero = m.abs() <= opts.mean_flow_tol * scale * l;
    let mean_flow_sign: i8 = if m_zero {
        0
    } else if m > 0.0 {
        1
    } else {
        -1
    };
    let has_cross = graph.cross_channel_edges() > 0;
    let has_rolls = interior.iter().any(|p| p.kind == PointKind::Center);
    let regime = if has_cross && mean_flow_sign == 0 {
        Regime::PureRolls
    } else if !has_cross && has_rolls && mean_flow_sign < 0 {
        Regime::MeanderA
    } else if !has_cross && has_rolls && mean_flow_sign > 0 {
        Regime::MeanderB
    } else {
        Regime::Other
    };

    let mut points = interior;
    points.extend(boundary);
    Ok(TopologyReport {
        points,
        graph,
        d_regular,
        d_regular_witnesses,
        structurally_stable: verdict.stable,
        stability_reasons: verdict.reasons,
        space_tag: bc.space_tag,
        regime,
        mean_flow: m,
        mean_flow_sign,
    })
}
