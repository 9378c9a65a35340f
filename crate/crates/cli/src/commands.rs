use rayon::prelude::*;
use sha2::{Digest, Sha256};

use cusplab::ergodic::{
    birkhoff_lyapunov, density_histogram, entropy_word_count, geometric_radii, infinite_exponent_series,
    local_dimension, singular_integral_classify, ApproachSide, DecayModel, SeriesVerdict,
    Verdict, Weight,
};
use cusplab::extension::{backward_orbit, pullback_interval, BranchPolicy};
use cusplab::inducing::{build_induced, spread_measure, transfer_density};
use cusplab::maps::{Orbit, OrbitStart};
use cusplab::{Error, OpenInterval, PiecewiseMap, Point};

use crate::config::{ConfigError, RunConfig};
use crate::output::{Cell, Table};

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Precondition(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Precondition(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
            RunError::Precondition(_) => "precondition",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Numerical(m) | RunError::Precondition(m) => m,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::InvalidInterval { .. } => RunError::Config(e.to_string()),
            Error::Precondition(_) => RunError::Precondition(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

pub type Run<T> = Result<T, RunError>;

fn alpha_cell(cfg: &RunConfig) -> Cell {
    Cell::opt(cfg.alpha)
}

fn lower(v: impl std::fmt::Debug) -> String {
    format!("{v:?}").to_lowercase()
}

pub fn eval_grid(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let n = RunConfig::positive(cfg.n, "n", 1001)?;
    let amb = map.ambient();
    let kernel = map.conjugacy().and_then(|c| c.kernel().copied());
    let mut t = Table::new(&["x", "branch", "value", "log_abs_deriv", "kernel"]);
    for i in 0..n {
        let x = amb.lo() + (i as f64 + 0.5) / n as f64 * amb.len();
        let Ok((y, ld, b)) = map.step(&map.point(x)) else {
            continue;
        };
        let h = kernel.and_then(|k| k.eval(x).ok());
        t.push(vec![x.into(), b.into(), y.x().into(), ld.into(), Cell::opt(h)]);
    }
    Ok(t)
}

pub fn lyapunov(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let n = RunConfig::positive(cfg.n, "n", 100_000)?;
    let est = birkhoff_lyapunov(&map, OrbitStart::Invariant, n, 0, cfg.seed())?;
    let mut t = Table::new(&["family", "alpha", "n", "seed", "chi"]);
    t.push(vec![
        Cell::text(cfg.family()?),
        alpha_cell(cfg),
        n.into(),
        Cell::Uint(cfg.seed()),
        est.chi.into(),
    ]);
    Ok(t)
}

fn classify_with(cfg: &RunConfig, map: &PiecewiseMap) -> Run<(cusplab::ergodic::IntegrabilityVerdict, String, Weight)> {
    let amb = map.ambient();
    let point = cfg.point.unwrap_or(if amb.lo() == 0.0 { 0.0 } else { amb.mid() });
    let side = match cfg.side.as_deref() {
        Some("left") => ApproachSide::Left,
        Some("right") => ApproachSide::Right,
        Some("both") => ApproachSide::Both,
        Some(other) => return Err(RunError::Config(format!("unknown side {other:?}"))),
        None if point <= amb.lo() => ApproachSide::Right,
        None if point >= amb.hi() => ApproachSide::Left,
        None => ApproachSide::Both,
    };
    let weight = match cfg.weight.as_deref() {
        Some("exact") => Weight::ExactDensity,
        Some("lebesgue") => Weight::Lebesgue,
        Some(other) => return Err(RunError::Config(format!("unknown weight {other:?}"))),
        None if map.conjugacy().is_some() => Weight::ExactDensity,
        None => Weight::Lebesgue,
    };
    let range = (cfg.k_lo.unwrap_or(8), cfg.k_hi.unwrap_or(48));
    let v = singular_integral_classify(map, point, side, weight, range)?;
    Ok((v, lower(side), weight))
}

pub fn classify(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let (v, side, weight) = classify_with(cfg, &map)?;
    let mut t = Table::new(&[
        "family",
        "alpha",
        "side",
        "weight",
        "verdict",
        "model",
        "fitted_exponent",
        "fitted_ratio",
        "k_lo",
        "k_hi",
    ]);
    let model = match v.model {
        DecayModel::Geometric => "geometric",
        DecayModel::PowerLaw => "power_law",
    };
    t.push(vec![
        Cell::text(cfg.family()?),
        alpha_cell(cfg),
        Cell::text(side),
        Cell::text(if weight == Weight::ExactDensity { "exact" } else { "lebesgue" }),
        Cell::text(lower(v.verdict)),
        Cell::text(model),
        v.fitted_exponent.into(),
        v.fitted_ratio.into(),
        v.k_range.0.into(),
        v.k_range.1.into(),
    ]);
    Ok(t)
}

pub fn entropy(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let n = RunConfig::positive(cfg.n, "n", 100_000)?;
    let words = cfg.words.clone().unwrap_or_else(|| vec![4, 8, 12]);
    let partition: Vec<OpenInterval> = map.branches().iter().map(|b| b.domain()).collect();
    let est = entropy_word_count(&map, &partition, OrbitStart::Invariant, n, &words, cfg.seed())?;
    let mut t = Table::new(&["word_length", "rate", "boundary_hits", "orbit_length"]);
    for (len, rate) in est.rates {
        t.push(vec![len.into(), rate.into(), est.boundary_hits.into(), n.into()]);
    }
    Ok(t)
}

/// Orbit samples of the configured measure: the invariant measure of a
/// tent-conjugate map, or a Bernoulli measure of its tent coding.
fn measure_samples(cfg: &RunConfig, map: &PiecewiseMap, count: usize, seed: u64) -> Run<Vec<f64>> {
    if map.conjugacy().is_none() {
        return Err(RunError::Precondition("dimension needs a tent-conjugate map".into()));
    }
    let start = match cfg.measure.as_deref().unwrap_or("acip") {
        "acip" => OrbitStart::Invariant,
        "bernoulli" => OrbitStart::Bernoulli(RunConfig::unit_open(cfg.p, "p", 0.3)?),
        other => return Err(RunError::Config(format!("unknown measure {other:?}"))),
    };
    let orbit = Orbit::new(map, start, seed)?.positions_only();
    Ok(orbit.take(count).map(|p| p.map(|p| p.x())).collect::<Result<_, _>>()?)
}

pub fn dimension(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let n = RunConfig::positive(cfg.n, "n", 200_000)?;
    let want = RunConfig::positive(cfg.points, "points", 200)?;
    let samples = measure_samples(cfg, &map, n, cfg.seed())?;
    // evaluation points are kept away from the ends, where the conjugacy is flat
    let amb = map.ambient();
    let (lo, hi) = (amb.lo() + 0.05 * amb.len(), amb.hi() - 0.05 * amb.len());
    let points: Vec<f64> = measure_samples(cfg, &map, 10 * want, cfg.seed().wrapping_add(1))?
        .into_iter()
        .filter(|x| (lo..=hi).contains(x))
        .take(want)
        .collect();
    let est = local_dimension(&points, &samples, &geometric_radii(1e-7, 0.1, 40))?;
    let mut t = Table::new(&["kind", "x", "slope", "radii_used"]);
    for p in &est.per_point {
        t.push(vec![Cell::text("point"), p.x.into(), Cell::opt(p.slope), p.radii_used.into()]);
    }
    t.push(vec![Cell::text("pooled"), Cell::Empty, est.pooled.into(), est.pooled_radii.into()]);
    Ok(t)
}

fn exact_density(map: &PiecewiseMap, a: f64, b: f64) -> Cell {
    let amb = map.ambient();
    Cell::opt(
        map.conjugacy()
            .map(|c| c.mass(&Point::from_x(a, amb), &Point::from_x(b, amb)) / (b - a)),
    )
}

pub fn density(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let n = RunConfig::positive(cfg.n, "n", 1_000_000)?;
    let bins = RunConfig::positive(cfg.bins, "bins", 100)?;
    let est = density_histogram(&map, OrbitStart::Invariant, n, bins, cfg.seed())?;
    let mut t = Table::new(&["bin_center", "density", "exact"]);
    for (i, d) in est.densities().into_iter().enumerate() {
        let (a, b) = est.edges(i);
        t.push(vec![(0.5 * (a + b)).into(), d.into(), exact_density(&map, a, b)]);
    }
    Ok(t)
}

fn nice_interval(cfg: &RunConfig, map: &PiecewiseMap) -> Run<OpenInterval> {
    match (cfg.u_lo, cfg.u_hi, map.conjugacy()) {
        (Some(lo), Some(hi), _) => Ok(OpenInterval::new(lo, hi)?),
        (None, None, Some(conj)) => Ok(OpenInterval::new(conj.from_uniform(0.4), conj.from_uniform(0.8))?),
        _ => Err(RunError::Config("give both --u-lo and --u-hi".into())),
    }
}

pub fn induce(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let u = nice_interval(cfg, &map)?;
    let depth = RunConfig::positive(cfg.depth, "depth", 16)?;
    let mut t = Table::new(&["depth", "branch_count", "kac_sum", "residual", "lambda_min", "return_order"]);
    for d in 1..=depth {
        match build_induced(&map, u, d, 1) {
            Ok(imm) => t.push(vec![
                d.into(),
                imm.branches.len().into(),
                imm.kac_sum().into(),
                imm.residual_measure.into(),
                imm.lambda_min.into(),
                imm.return_order.into(),
            ]),
            // shallow depths may not reach a full return yet
            Err(Error::EmptyInducedMap(_)) => {
                t.push(vec![d.into(), 0usize.into(), 0.0.into(), u.len().into(), Cell::Empty, Cell::Empty])
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(t)
}

pub fn spread(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let u = nice_interval(cfg, &map)?;
    let depth = RunConfig::positive(cfg.depth, "depth", 16)?;
    let bins = RunConfig::positive(cfg.bins, "bins", 1024)?;
    let imm = build_induced(&map, u, depth, 1)?;
    let nu = transfer_density(&imm, 512, 1000)?;
    if !nu.converged {
        return Err(RunError::Numerical(format!(
            "induced density did not converge (last change {:e})",
            nu.last_change
        )));
    }
    let mu = spread_measure(&imm, &nu.density, bins)?;
    let mut t = Table::new(&["bin_center", "density", "exact"]);
    for (i, d) in mu.densities().into_iter().enumerate() {
        let (a, b) = mu.edges(i);
        t.push(vec![(0.5 * (a + b)).into(), d.into(), exact_density(&map, a, b)]);
    }
    Ok(t)
}

pub fn pullback(cfg: &RunConfig) -> Run<Table> {
    let map = cfg.map()?;
    let n = RunConfig::positive(cfg.n, "n", 60)?;
    let amb = map.ambient();
    let y0 = cfg.y0.unwrap_or(amb.lo() + 0.4 * amb.len());
    let radius = cfg.radius.unwrap_or(0.05);
    let policy = match cfg.policy.as_deref() {
        Some("uniform") => BranchPolicy::Uniform,
        Some("density") => BranchPolicy::DensityWeighted,
        Some(other) => return Err(RunError::Config(format!("unknown policy {other:?}"))),
        None if map.conjugacy().is_some() => BranchPolicy::DensityWeighted,
        None => BranchPolicy::Uniform,
    };
    let orbit = backward_orbit(&map, y0, n, policy, cfg.seed())?;
    let v = OpenInterval::new((y0 - radius).max(amb.lo()), (y0 + radius).min(amb.hi()))?;
    let tr = pullback_interval(&map, &orbit, v)?;
    let mut t = Table::new(&["step", "y", "length", "log_length", "distortion"]);
    for i in 0..tr.lengths.len() {
        let dist = if i == 0 { 0.0 } else { tr.distortion_partial_sums[i - 1] };
        t.push(vec![
            i.into(),
            orbit.points[i].x().into(),
            tr.lengths[i].into(),
            tr.log_lengths[i].into(),
            dist.into(),
        ]);
    }
    Ok(t)
}

pub fn series(cfg: &RunConfig) -> Run<Table> {
    let alpha = cfg.alpha()?;
    let p = RunConfig::unit_open(cfg.p, "p", 0.5)?;
    let offset = cfg.offset.unwrap_or(1);
    let terms = RunConfig::positive(cfg.terms, "terms", 200)?;
    let r = infinite_exponent_series(alpha, p, offset, terms)?;
    let mut t = Table::new(&[
        "alpha",
        "p",
        "offset",
        "terms",
        "ratio",
        "verdict",
        "lower_partial",
        "upper_partial",
        "lower_limit",
        "upper_limit",
    ]);
    t.push(vec![
        alpha.into(),
        p.into(),
        (offset as usize).into(),
        terms.into(),
        r.ratio.into(),
        Cell::text(lower(r.verdict)),
        (*r.lower.last().unwrap()).into(),
        (*r.upper.last().unwrap()).into(),
        Cell::opt(r.lower_limit),
        Cell::opt(r.upper_limit),
    ]);
    Ok(t)
}

/// Seed of one sweep task, fixed by the base seed and the parameter value.
fn task_seed(base: u64, alpha: f64) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(alpha.to_bits().to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn sweep_task(cfg: &RunConfig, op: &str, alpha: f64) -> Run<(String, f64)> {
    match op {
        "classify" => {
            let map = cfg.map_with_alpha(Some(alpha))?;
            let (v, _, _) = classify_with(cfg, &map)?;
            if v.verdict == Verdict::Inconclusive {
                return Err(RunError::Numerical("inconclusive verdict".into()));
            }
            Ok((lower(v.verdict), v.fitted_exponent))
        }
        "series" => {
            let p = RunConfig::unit_open(cfg.p, "p", 0.5)?;
            let r = infinite_exponent_series(alpha, p, cfg.offset.unwrap_or(1), cfg.terms.unwrap_or(200))?;
            let value = if r.verdict == SeriesVerdict::Convergent { r.upper_limit.unwrap() } else { f64::INFINITY };
            Ok((lower(r.verdict), value))
        }
        "lyapunov" => {
            let map = cfg.map_with_alpha(Some(alpha))?;
            let n = RunConfig::positive(cfg.n, "n", 100_000)?;
            let est = birkhoff_lyapunov(&map, OrbitStart::Invariant, n, 0, cfg.seed())?;
            Ok((String::new(), est.chi))
        }
        other => Err(RunError::Config(format!("unknown sweep op {other:?}"))),
    }
}

/// Runs one operation per parameter value; failures become rows.
pub fn sweep(cfg: &RunConfig, threads: Option<usize>) -> Run<Table> {
    let op = cfg.op.clone().unwrap_or_else(|| "classify".into());
    if !["classify", "series", "lyapunov"].contains(&op.as_str()) {
        return Err(RunError::Config(format!("unknown sweep op {op:?}")));
    }
    let alphas = cfg
        .alphas
        .clone()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| RunError::Config("sweep needs --alphas".into()))?;
    if op != "series" {
        cfg.family()?;
    }
    let base = cfg.seed();
    let work = || -> Vec<(f64, u64, Run<(String, f64)>)> {
        alphas
            .par_iter()
            .map(|&a| {
                let seed = task_seed(base, a);
                let mut task = cfg.clone();
                task.alpha = Some(a);
                task.seed = Some(seed);
                (a, seed, sweep_task(&task, &op, a))
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut t = Table::new(&["alpha", "op", "seed", "status", "verdict", "value", "error"]);
    for (a, seed, r) in results {
        let head = vec![a.into(), Cell::text(&op), Cell::Uint(seed)];
        let tail = match r {
            Ok((verdict, value)) => vec![Cell::text("ok"), Cell::text(verdict), value.into(), Cell::Empty],
            Err(e) => vec![Cell::text("failed"), Cell::Empty, Cell::Empty, Cell::text(e.message().replace('\n', " "))],
        };
        t.push(head.into_iter().chain(tail).collect());
    }
    Ok(t)
}
