//! Plumbing behind the `melnikov` binary: a [`RunConfig`] names one
//! subcommand plus its inputs, [`run`] executes it and maps the outcome to
//! an exit status.

use melnikov_core::abelian::{reduce, Side};
use melnikov_core::melnikov::{assemble, expansion_from_str, MelnikovExpansion};
use melnikov_core::model::{CurvePower, Family, PerturbationSpec};
use melnikov_core::oracle::{integral_quadrature, melnikov_quadrature, QuadratureOptions};
use melnikov_core::rational::{format as fmt_q, from_f64, q};
use melnikov_core::roots::{bound_Z, construct_lower_bound, construct_max_zeros, count_zeros, Construction};
use melnikov_core::simulate::{
    displacement_grid_with, find_limit_cycles_with, first_return, flow_with, FlowOptions, PiecewiseState,
};
use melnikov_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Read, Write};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_FINDING: i32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Reduce {
        i: u32,
        j: u32,
        m: u32,
        side: Side,
    },
    Assemble,
    /// `expansion`: the input is a Melnikov expansion rather than a spec.
    Count {
        expansion: bool,
    },
    Bounds {
        m_max: u32,
        n_max: u32,
    },
    Construct {
        m: u32,
        n: u32,
        targets: Option<Vec<f64>>,
    },
    Verify {
        grid: Grid,
        specs: usize,
    },
    Simulate {
        epsilon: f64,
        mode: SimMode,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grid {
    /// `J`/`I` closed forms against quadrature.
    Default,
    /// Assembled Melnikov functions of seeded random specs against quadrature.
    Melnikov,
}

impl std::str::FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Grid::Default),
            "melnikov" => Ok(Grid::Melnikov),
            _ => Err(format!("unknown grid {s:?} (expected default or melnikov)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimMode {
    /// One orbit from `B(u0)`; `t_max` defaults to the first return time.
    Trajectory {
        u0: f64,
        t_max: Option<f64>,
    },
    Cycles {
        u_min: f64,
        u_max: f64,
        samples: usize,
    },
    PlotData {
        u_min: f64,
        u_max: f64,
        samples: usize,
    },
}

/// Every numeric threshold the commands use, with the library defaults.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub flow: FlowOptions,
    pub quadrature: QuadratureOptions,
    /// Relative agreement demanded by `verify`.
    pub verify_rel: f64,
    /// Absolute agreement, in units of the integral of `|integrand|`, accepted
    /// for integrals that vanish or nearly cancel.
    pub verify_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            flow: FlowOptions::default(),
            quadrature: QuadratureOptions::default(),
            verify_rel: 1e-8,
            verify_floor: 1e-13,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 11] = [
        "rtol",
        "atol",
        "max_step",
        "max_steps",
        "event_tol",
        "graze_tol",
        "quad_abs_tol",
        "quad_rel_tol",
        "quad_max_evals",
        "verify_rel",
        "verify_floor",
    ];

    /// Applies `key=value` overrides.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        for (k, &v) in overrides {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Domain(format!("tolerance {k} must be positive, got {v}")));
            }
            match k.as_str() {
                "rtol" => self.flow.rtol = v,
                "atol" => self.flow.atol = v,
                "max_step" => self.flow.max_step = v,
                "max_steps" => self.flow.max_steps = v as usize,
                "event_tol" => self.flow.event_tol = v,
                "graze_tol" => self.flow.graze_tol = v,
                "quad_abs_tol" => self.quadrature.abs_tol = v,
                "quad_rel_tol" => self.quadrature.rel_tol = v,
                "quad_max_evals" => self.quadrature.max_evals = v as usize,
                "verify_rel" => self.verify_rel = v,
                "verify_floor" => self.verify_floor = v,
                _ => {
                    return Err(CliError::Domain(format!(
                        "unknown tolerance {k:?}; known keys: {}",
                        Self::KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(self)
    }
}

/// Parses `key=value`.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value in {s:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    /// Spec or expansion JSON; `None` or `-` reads stdin.
    pub input: Option<PathBuf>,
    /// `None` writes to stdout.
    pub output: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: None,
            output: None,
            tolerances: Tolerances::default(),
            seed: 0,
            jobs: 1,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Domain(String),
    Finding(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(s) => write!(f, "error: {s}"),
            CliError::Finding(s) => write!(f, "FINDING: {s}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if let Error::Finding(s) = e {
            CliError::Finding(s)
        } else if e.is_finding() {
            CliError::Finding(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(format!("i/o: {e}"))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Finding(_) => EXIT_FINDING,
        }
    }
}

/// What a successful command produced; `findings` turn the exit status into 2.
#[derive(Debug, Default)]
pub struct Outcome {
    pub findings: Vec<String>,
}

/// Runs the command, writes its output, reports on stderr and returns the exit status.
pub fn run(config: &RunConfig) -> i32 {
    let result = (|| -> Result<Outcome, CliError> {
        let mut buf = Vec::new();
        let outcome = execute(config, &mut buf)?;
        match &config.output {
            Some(p) => std::fs::write(p, &buf)?,
            None => io::stdout().write_all(&buf)?,
        }
        Ok(outcome)
    })();
    match result {
        Ok(o) if o.findings.is_empty() => EXIT_OK,
        Ok(o) => {
            for f in &o.findings {
                eprintln!("FINDING: {f}");
            }
            EXIT_FINDING
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Executes the command on a pool of `config.jobs` threads, writing to `out`.
pub fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| CliError::Domain(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let outcome = pool.install(|| dispatch(config, &mut buf))?;
    out.write_all(&buf)?;
    Ok(outcome)
}

fn read_input(config: &RunConfig) -> Result<String, CliError> {
    let mut s = String::new();
    match config.input.as_deref() {
        Some(p) if p.as_os_str() != "-" => {
            s = std::fs::read_to_string(p).map_err(|e| CliError::Domain(format!("{}: {e}", p.display())))?
        }
        _ => {
            io::stdin().read_to_string(&mut s)?;
        }
    }
    Ok(s)
}

fn read_spec(config: &RunConfig) -> Result<PerturbationSpec, CliError> {
    Ok(PerturbationSpec::from_json_str(&read_input(config)?)?)
}

fn write_json(out: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| CliError::Domain(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Domain(format!("csv: {e}"))
}

fn cp(m: u32) -> Result<CurvePower, CliError> {
    Ok(CurvePower::new(m)?)
}

fn dispatch(config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let tol = &config.tolerances;
    match &config.command {
        Command::Reduce { i, j, m, side } => {
            write_json(out, &reduce(*i, *j, cp(*m)?, *side).to_json())?;
            Ok(Outcome::default())
        }
        Command::Assemble => {
            let spec = read_spec(config)?;
            write_json(out, &assemble(&spec)?.to_json())?;
            Ok(Outcome::default())
        }
        Command::Count { expansion } => {
            let text = read_input(config)?;
            let e = if *expansion {
                expansion_from_str(&text)?
            } else {
                assemble(&PerturbationSpec::from_json_str(&text)?)?
            };
            count(&e, out)
        }
        Command::Bounds { m_max, n_max } => bounds(*m_max, *n_max, out),
        Command::Construct { m, n, targets } => {
            let c = match targets {
                Some(t) => construct_max_zeros(cp(*m)?, *n, t)?,
                None => construct_lower_bound(cp(*m)?, *n)?,
            };
            let mut findings = Vec::new();
            let lower = bound_Z(c.spec.m, *n).lower;
            if targets.is_none() && (c.report.simple_count() as i64) < lower {
                findings.push(format!(
                    "m={m}, n={n}: realized {} simple zeros, below the stated lower bound {lower}",
                    c.report.simple_count()
                ));
            }
            write_json(out, &construction_json(&c))?;
            Ok(Outcome { findings })
        }
        Command::Verify {
            grid: Grid::Default, ..
        } => verify_integrals(tol, out),
        Command::Verify {
            grid: Grid::Melnikov,
            specs,
        } => verify_melnikov(tol, config.seed, *specs, out),
        Command::Simulate { epsilon, mode } => simulate(&read_spec(config)?, *epsilon, mode, tol, out),
    }
}

fn count(e: &MelnikovExpansion, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let report = count_zeros(e)?;
    let b = bound_Z(e.m, e.n);
    let mut findings = Vec::new();
    if report.is_certified() && report.count() as i64 > b.upper {
        findings.push(format!(
            "m={}, n={}: certified {} zeros exceeds the upper bound {}",
            e.m.get(),
            e.n,
            report.count(),
            b.upper
        ));
    }
    write_json(out, &report.to_json())?;
    Ok(Outcome { findings })
}

fn bounds(m_max: u32, n_max: u32, out: &mut dyn Write) -> Result<Outcome, CliError> {
    if m_max == 0 {
        return Err(CliError::Domain("m-max must be at least 1".into()));
    }
    let mut w = csv_writer(out);
    w.write_record(["m", "n", "region", "lower", "upper"])
        .map_err(csv_err)?;
    let mut findings = Vec::new();
    for m in 1..=m_max {
        for n in 0..=n_max {
            let b = bound_Z(cp(m)?, n);
            w.write_record([
                m.to_string(),
                n.to_string(),
                b.region.clause_label().to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ])
            .map_err(csv_err)?;
            findings.extend(b.findings);
        }
    }
    w.flush()?;
    Ok(Outcome { findings })
}

fn construction_json(c: &Construction) -> Value {
    json!({
        "spec": c.spec.to_json(),
        "expansion": c.expansion.to_json(),
        "coefficients": c.coefficients.iter().map(|(b, v)| json!([b.to_string(), fmt_q(v)])).collect::<Vec<_>>(),
        "targets": c.targets.iter().map(fmt_q).collect::<Vec<_>>(),
        "report": c.report.to_json(),
    })
}

const VERIFY_US: [f64; 4] = [0.3, 0.7, 1.0, 1.5];

fn verify_integrals(tol: &Tolerances, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut cases = Vec::new();
    for m in 1..=6u32 {
        for u in VERIFY_US {
            for s in 0..=8u32 {
                for j in 0..=s {
                    for side in [Side::Plus, Side::Minus] {
                        cases.push((m, u, s - j, j, side));
                    }
                }
            }
        }
    }
    let rows: Vec<VerifyRow> = cases
        .par_iter()
        .map(|&(m, u, i, j, side)| {
            let mc = cp(m)?;
            let closed = reduce(i, j, mc, side).canonical(mc).eval_exact(u, mc)?;
            let quad = integral_quadrature(i, j, u, mc, side, &tol.quadrature)?;
            Ok(VerifyRow::new(closed, quad.value, quad.abs_integral, tol))
        })
        .collect::<Result<_, CliError>>()?;
    let mut w = csv_writer(out);
    w.write_record([
        "m",
        "u",
        "i",
        "j",
        "side",
        "closed",
        "quadrature",
        "abs_error",
        "rel_error",
        "scaled_error",
        "ok",
    ])
    .map_err(csv_err)?;
    let mut findings = Vec::new();
    for (&(m, u, i, j, side), r) in cases.iter().zip(&rows) {
        let side = match side {
            Side::Plus => "plus",
            Side::Minus => "minus",
        };
        let mut rec = vec![
            m.to_string(),
            u.to_string(),
            i.to_string(),
            j.to_string(),
            side.to_string(),
        ];
        rec.extend(r.fields());
        w.write_record(&rec).map_err(csv_err)?;
        if !r.ok {
            findings.push(format!(
                "closed form and quadrature disagree: m={m} u={u} ({i},{j}) {side}"
            ));
        }
    }
    w.flush()?;
    Ok(Outcome { findings })
}

struct VerifyRow {
    closed: f64,
    quad: f64,
    abs: f64,
    rel: f64,
    scaled: f64,
    ok: bool,
}

impl VerifyRow {
    fn new(closed: f64, quad: f64, abs_integral: f64, tol: &Tolerances) -> Self {
        let abs = (closed - quad).abs();
        let rel = abs / closed.abs().max(quad.abs()).max(f64::MIN_POSITIVE);
        let scaled = abs / abs_integral.max(f64::MIN_POSITIVE);
        let ok = rel <= tol.verify_rel || scaled <= tol.verify_floor;
        VerifyRow {
            closed,
            quad,
            abs,
            rel,
            scaled,
            ok,
        }
    }

    fn fields(&self) -> Vec<String> {
        let e = |x: f64| format!("{x:e}");
        vec![
            e(self.closed),
            e(self.quad),
            e(self.abs),
            e(self.rel),
            e(self.scaled),
            self.ok.to_string(),
        ]
    }
}

/// Random spec with about 70% of coefficients set to `p/q`, `|p| <= 9`, `1 <= q <= 5`.
pub fn random_spec(rng: &mut ChaCha8Rng, m: CurvePower, n: u32) -> PerturbationSpec {
    let mut s = PerturbationSpec::zero(m, n);
    for f in Family::ALL {
        for (i, j) in PerturbationSpec::indices(n) {
            if rng.gen_bool(0.7) {
                let num: i64 = rng.gen_range(-9..=9);
                let den: i64 = rng.gen_range(1..=5);
                s.set(f, i, j, q(num, den)).expect("index within degree");
            }
        }
    }
    s
}

const MELNIKOV_GRID: [(u32, u32); 6] = [(1, 2), (2, 1), (2, 2), (3, 2), (4, 2), (5, 1)];

fn verify_melnikov(tol: &Tolerances, seed: u64, specs: usize, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for (m, n) in MELNIKOV_GRID {
        for k in 0..specs {
            cases.push((m, n, k, random_spec(&mut rng, cp(m)?, n)));
        }
    }
    let rows: Vec<Vec<VerifyRow>> = cases
        .par_iter()
        .map(|(_, _, _, spec)| {
            let e = assemble(spec)?;
            VERIFY_US
                .iter()
                .map(|&u| {
                    let closed = e.enclose(&from_f64(u)?, 128).to_f64();
                    let quad = melnikov_quadrature(spec, u, &tol.quadrature)?;
                    Ok(VerifyRow::new(closed, quad.value, quad.abs_integral, tol))
                })
                .collect::<Result<_, CliError>>()
        })
        .collect::<Result<_, CliError>>()?;
    let mut w = csv_writer(out);
    w.write_record([
        "m",
        "n",
        "spec",
        "u",
        "closed",
        "quadrature",
        "abs_error",
        "rel_error",
        "scaled_error",
        "ok",
    ])
    .map_err(csv_err)?;
    let mut findings = Vec::new();
    for ((m, n, k, _), rs) in cases.iter().zip(&rows) {
        for (u, r) in VERIFY_US.iter().zip(rs) {
            let mut rec = vec![m.to_string(), n.to_string(), k.to_string(), u.to_string()];
            rec.extend(r.fields());
            w.write_record(&rec).map_err(csv_err)?;
            if !r.ok {
                findings.push(format!(
                    "assembled M and quadrature disagree: m={m} n={n} spec {k} u={u}"
                ));
            }
        }
    }
    w.flush()?;
    Ok(Outcome { findings })
}

fn simulate(
    spec: &PerturbationSpec,
    epsilon: f64,
    mode: &SimMode,
    tol: &Tolerances,
    out: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let opts = tol.flow;
    match *mode {
        SimMode::Trajectory { u0, t_max } => {
            let t_max = match t_max {
                Some(t) => t,
                None => first_return(spec, epsilon, u0, opts)?.1,
            };
            let tr = flow_with(spec, epsilon, PiecewiseState::on_curve(u0, spec.m), t_max, opts)?;
            let mut w = csv_writer(out);
            w.write_record(["t", "x", "y", "zone"]).map_err(csv_err)?;
            for s in &tr.states {
                w.write_record([s.t.to_string(), s.x.to_string(), s.y.to_string(), s.zone.to_string()])
                    .map_err(csv_err)?;
            }
            w.flush()?;
        }
        SimMode::Cycles { u_min, u_max, samples } => {
            let found = find_limit_cycles_with(spec, epsilon, (u_min, u_max), samples, opts)?;
            write_json(out, &Value::Array(found.iter().map(|c| c.to_json()).collect()))?;
        }
        SimMode::PlotData { u_min, u_max, samples } => {
            let grid = displacement_grid_with(spec, epsilon, (u_min, u_max), samples, opts)?;
            let mut w = csv_writer(out);
            w.write_record(["u", "delta"]).map_err(csv_err)?;
            for (u, d) in grid {
                w.write_record([u.to_string(), d.to_string()]).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(Outcome::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_to_string(c: &RunConfig) -> (Result<Outcome, CliError>, String) {
        let mut buf = Vec::new();
        let r = execute(c, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn overrides_apply_and_reject_unknown_keys() {
        let mut o = BTreeMap::new();
        o.insert("rtol".to_string(), 1e-9);
        o.insert("verify_rel".to_string(), 1e-6);
        let t = Tolerances::default().with_overrides(&o).unwrap();
        assert_eq!(t.flow.rtol, 1e-9);
        assert_eq!(t.verify_rel, 1e-6);
        o.insert("bogus".to_string(), 1.0);
        assert!(Tolerances::default().with_overrides(&o).is_err());
        assert_eq!(parse_override("atol = 1e-10").unwrap(), ("atol".to_string(), 1e-10));
        assert!(parse_override("atol").is_err());
    }

    #[test]
    fn bounds_table_has_the_corollary_row() {
        let (r, s) = run_to_string(&RunConfig::new(Command::Bounds { m_max: 3, n_max: 4 }));
        assert!(!r.unwrap().findings.is_empty());
        assert!(s.lines().any(|l| l == "3,2,D₂∪D₃,5,6"), "{s}");
        assert_eq!(s.lines().count(), 1 + 3 * 5);
    }

    #[test]
    fn reduce_emits_terms() {
        let (r, s) = run_to_string(&RunConfig::new(Command::Reduce {
            i: 0,
            j: 0,
            m: 3,
            side: Side::Plus,
        }));
        r.unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert!(v["terms"].is_array());
    }

    #[test]
    fn melnikov_grid_is_seed_deterministic() {
        let mut c = RunConfig::new(Command::Verify {
            grid: Grid::Melnikov,
            specs: 1,
        });
        c.seed = 11;
        let (r1, a) = run_to_string(&c);
        c.jobs = 2;
        let (r2, b) = run_to_string(&c);
        assert!(r1.unwrap().findings.is_empty() && r2.unwrap().findings.is_empty());
        assert_eq!(a, b);
        c.seed = 12;
        assert_ne!(run_to_string(&c).1, a);
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), EXIT_DOMAIN);
        assert_eq!(CliError::from(Error::Finding("x".into())).exit_code(), EXIT_FINDING);
        assert_eq!(CliError::from(Error::RankDeficient(vec![])).exit_code(), EXIT_FINDING);
    }
}
