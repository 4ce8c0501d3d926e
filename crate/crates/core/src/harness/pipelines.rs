//! One function per CLI subcommand, each writing into a [`RunDir`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Cell, Check, RunDir, RunOutcome, Table};
use crate::capacity::{capacity_zero_trend, estimate, PrimalWitness};
use crate::density::{build_intersection_density, geometric_deltas, DensityConfig, RefinementGauge};
use crate::error::{invalid, Error, Result};
use crate::geometry::CompactSet;
use crate::outer::transfer::{kahane_transfer, LineMeasure, TransferConfig};
use crate::outer::{sa_certificate, OmegaGauge, OuterStagesConfig, DEFAULT_ETA, OUTER_GRID};
use crate::row;
use crate::separation::{check_disjoint, greedy_select, prime_select, Strategy};
use crate::uniqueness::{
    assemble_uniqueness_set, block_mass_certificate, build_schedule, divergence_report, main_balance_tail, Atoms,
    Rule, ScheduleConfig, TestMeasure, UniquenessSet, DEFAULT_KAPPA,
};

/// Tolerance for the outer-stage and density certificates.
pub const CERT_TOL: f64 = 1e-9;
/// Annihilation residue required of measures with exact transforms.
pub const RESIDUE_LIMIT: f64 = 1e-6;
/// Largest complement (in generation arcs) for the restricted-Lebesgue
/// certificate; each block costs a NUFFT over the interior endpoints.
pub const CERTIFICATE_ARC_LIMIT: u128 = 25_000_000;
/// Range and vanishing tolerance for density samples.
pub const DENSITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Main,
    Hk,
    Custom,
}

/// Flat form of a δ schedule, shared by every command that builds `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub rule: RuleName,
    pub a: f64,
    pub hk_q: f64,
    pub hk_eps: f64,
    pub deltas: Vec<f64>,
    /// `None` picks the largest `c` inside the budget.
    pub c: Option<f64>,
    pub budget: f64,
    pub generations: usize,
    pub kappa: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            rule: RuleName::Main,
            a: 3.0,
            hk_q: 1.5,
            hk_eps: 0.1,
            deltas: Vec::new(),
            c: None,
            budget: 0.1,
            generations: 30,
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl ScheduleSpec {
    pub fn to_config(&self, generations: usize) -> ScheduleConfig {
        let rule = match self.rule {
            RuleName::Main => Rule::Main { a: self.a },
            RuleName::Hk => Rule::Hk { q: self.hk_q, eps: self.hk_eps },
            RuleName::Custom => Rule::Custom { deltas: self.deltas.clone() },
        };
        ScheduleConfig { rule, c: self.c, budget: self.budget, generations, kappa: self.kappa }
    }

    fn assemble(&self) -> Result<UniquenessSet> {
        assemble_uniqueness_set(&build_schedule(&self.to_config(self.generations))?)
    }
}

fn q_label(q: f64) -> String {
    format!("q={q}")
}

// build

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub schedule: ScheduleSpec,
    pub q_list: Vec<f64>,
    /// Length of the reference series in divergence.csv.
    pub divergence_terms: usize,
    /// Start of the integral-test tail for the entropy balance (MAIN only).
    pub balance_from: usize,
    /// Block-mass certificate for normalized Lebesgue measure on `E`.
    pub certificate: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec::default(),
            q_list: vec![1.1, 1.5, 1.9],
            divergence_terms: 20_000,
            balance_from: 10_000,
            certificate: true,
        }
    }
}

pub fn run_build(cfg: &BuildConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let (checks, report) = build_into(&mut run, cfg)?;
    run.finish("build", cfg, checks, report)
}

fn build_into(run: &mut RunDir, cfg: &BuildConfig) -> Result<(Vec<Check>, Value)> {
    let uset = cfg.schedule.assemble()?;
    let params = &uset.schedule.params;
    run.write_json("set.json", &uset.set)?;
    run.write_json("schedule.json", &uset.schedule)?;
    run.write_json("entropy.json", &uset.entropy)?;

    let mut gens = Table::new(&["j", "delta", "l", "M", "N", "entropy_term", "tail", "blocktail"]);
    for p in params {
        gens.push(row![p.j, p.delta, p.l, p.m, p.n.unwrap_or(0), p.entropy_term(), p.tail(), p.blocktail()]);
    }
    run.write_table("generations.csv", &gens)?;

    let mut terms = Table::new(&["j", "entropy_term", "balance_term"]);
    for (p, (e, b)) in params.iter().zip(uset.entropy_terms.iter().zip(&uset.balance_terms)) {
        terms.push(row![p.j, *e, *b]);
    }
    run.write_table("entropy_terms.csv", &terms)?;

    let mut checks = vec![
        Check::new(
            "entropy_bound",
            uset.entropy.holds(),
            format!("exact {} <= bound {}", uset.entropy.exact, uset.entropy.lemma_bc_bound),
        ),
        separation_check(&uset.separation.ns, &uset.separation.ms)?,
        Check::new("separation_step_bound", uset.separation.all_bounds_ok(), "N_j <= 1 + |L_j| sum_{k<j} |L_k|"),
    ];

    let arcs = uset.set.arc_count();
    let certificate_note = match (cfg.certificate, arcs > CERTIFICATE_ARC_LIMIT) {
        (false, _) => Some("disabled".to_string()),
        (true, true) => Some(format!("skipped: {arcs} arcs exceed {CERTIFICATE_ARC_LIMIT}")),
        (true, false) => None,
    };
    if certificate_note.is_none() {
        let cert = block_mass_certificate(&uset, &TestMeasure::RestrictedLebesgue, &cfg.q_list)?;
        let mut header: Vec<String> =
            ["j", "N", "M", "S", "S_lower", "tail", "mass_floor", "mass_ok", "holder_ok"].map(String::from).into();
        header.extend(cfg.q_list.iter().map(|&q| format!("lq_partial_{}", q_label(q))));
        let mut table = Table::with_header(header);
        for r in &cert.rows {
            let mut cells = row![r.j, r.n, r.m, r.s, r.s_lower, r.tail, r.mass_floor, r.mass_ok, r.holder_ok];
            cells.extend(r.lq_partial.iter().map(Cell::cell));
            table.push(cells);
        }
        run.write_table("certificate.csv", &table)?;
        checks.push(Check::new("block_mass", cert.mass_ok(), "S_j >= 1 - tail_j for normalized m|E"));
        checks.push(Check::new("holder_step", cert.holder_ok(), "S_j^q/(2M_j)^(q-1) <= sum |mu^|^q"));
    }

    let terms_needed = cfg.divergence_terms.max(params.len());
    let long_deltas = match cfg.schedule.rule {
        RuleName::Custom => uset.schedule.deltas(),
        _ => build_schedule(&cfg.schedule.to_config(terms_needed))?.deltas(),
    };
    let div = divergence_report(&long_deltas, &cfg.q_list)?;
    let mut header = vec!["J".to_string()];
    header.extend(cfg.q_list.iter().map(|&q| format!("reference_{}", q_label(q))));
    let mut table = Table::with_header(header);
    for j in 1..=long_deltas.len() {
        let mut cells = row![j];
        cells.extend((0..cfg.q_list.len()).map(|qi| div.partial(qi, j).cell()));
        table.push(cells);
    }
    run.write_table("divergence.csv", &table)?;

    let n = long_deltas.len();
    let increments: Vec<Value> = cfg
        .q_list
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let inc = if n >= 2 { div.increment(qi, n / 2, n) } else { f64::NAN };
            json!({ "q": q, "from": n / 2, "to": n, "increment": inc, "growth_exponent": div.growth_exponents[qi] })
        })
        .collect();
    let balance_tail = match cfg.schedule.rule {
        RuleName::Main => Some(main_balance_tail(uset.schedule.c, cfg.schedule.a, cfg.balance_from)?),
        _ => None,
    };
    let report = json!({
        "c": uset.schedule.c,
        "series_bound": uset.schedule.series_bound,
        "measure": uset.measure,
        "measure_floor": 1.0 - uset.schedule.series_bound,
        "certificate": certificate_note,
        "entropy": uset.entropy,
        "balance_tail": balance_tail.map(|t| json!({ "from": cfg.balance_from, "bound": t })),
        "divergence": increments,
    });
    Ok((checks, report))
}

fn separation_check(ns: &[u64], ms: &[u64]) -> Result<Check> {
    Ok(match check_disjoint(ns, ms)? {
        None => Check::new("separation_disjoint", true, format!("{} blocks, exhaustive", ns.len())),
        Some(c) => Check::new("separation_disjoint", false, format!("blocks {} and {} share {}", c.i, c.j, c.value)),
    })
}

// blocks

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlocksConfig {
    pub schedule: ScheduleSpec,
    pub q_list: Vec<f64>,
    /// Number of smoothed-atomic measures.
    pub smoothed: usize,
    pub atoms_per_measure: usize,
    pub l: u32,
    /// Also test one purely atomic measure.
    pub atomic: bool,
    pub seed: u64,
}

impl Default for BlocksConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec::default(),
            q_list: vec![1.1, 1.5, 1.9],
            smoothed: 3,
            atoms_per_measure: 4,
            l: 4,
            atomic: true,
            seed: 1,
        }
    }
}

pub fn run_blocks(cfg: &BlocksConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let uset = cfg.schedule.assemble()?;
    let mut measures = vec![("lebesgue".to_string(), TestMeasure::RestrictedLebesgue)];
    for i in 0..cfg.smoothed {
        let seed = cfg.seed + i as u64;
        measures.push((format!("smoothed{}", i + 1), TestMeasure::smoothed(&uset.set, cfg.atoms_per_measure, cfg.l, seed)?));
    }
    if cfg.atomic {
        let atoms = Atoms::sample(&uset.set, cfg.atoms_per_measure, 0.0, cfg.seed + cfg.smoothed as u64)?;
        measures.push(("atomic".to_string(), TestMeasure::Atomic { atoms }));
    }
    run.write_json("measures.json", &measures)?;

    let mut header: Vec<String> =
        ["measure", "j", "N", "M", "S", "S_lower", "mass_floor", "mass_ok", "holder_ok", "residue", "residue_tail"]
            .map(String::from)
            .into();
    for &q in &cfg.q_list {
        header.push(format!("holder_lhs_{}", q_label(q)));
        header.push(format!("holder_rhs_{}", q_label(q)));
    }
    let mut table = Table::with_header(header);
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for (name, mu) in &measures {
        mu.check_support(&uset.set)?;
        let cert = block_mass_certificate(&uset, mu, &cfg.q_list)?;
        for r in &cert.rows {
            let mut cells = row![name.as_str(), r.j, r.n, r.m, r.s, r.s_lower, r.mass_floor, r.mass_ok, r.holder_ok, r.residue, r.residue_tail];
            for (l, rh) in r.holder_lhs.iter().zip(&r.holder_rhs) {
                cells.extend(row![*l, *rh]);
            }
            table.push(cells);
        }
        checks.push(Check::new(format!("block_mass_{name}"), cert.mass_ok(), "S_j >= 1 - |mu| tail_j"));
        checks.push(Check::new(format!("holder_step_{name}"), cert.holder_ok(), "Hoelder step on every block"));
        if let Some(res) = cert.max_residue() {
            checks.push(Check::new(
                format!("annihilation_{name}"),
                res < RESIDUE_LIMIT,
                format!("max residue {res:e} < {RESIDUE_LIMIT:e}"),
            ));
        }
        report.push(json!({ "measure": name, "max_residue": cert.max_residue() }));
    }
    run.write_table("blocks.csv", &table)?;
    run.finish("blocks", cfg, checks, json!({ "measures": report, "measure_of_E": uset.measure }))
}

// separate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparateConfig {
    pub schedule: ScheduleSpec,
    pub strategy: Strategy,
    /// Restrict the exhaustive disjointness scan to the first blocks.
    pub exhaustive_blocks: Option<usize>,
}

impl Default for SeparateConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec { generations: 50, ..ScheduleSpec::default() },
            strategy: Strategy::GreedyPigeonhole,
            exhaustive_blocks: None,
        }
    }
}

pub fn run_separate(cfg: &SeparateConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let schedule = build_schedule(&cfg.schedule.to_config(cfg.schedule.generations))?;
    let ms = schedule.ms();
    let sep = match cfg.strategy {
        Strategy::GreedyPigeonhole => greedy_select(&ms)?,
        Strategy::Prime => prime_select(&ms)?,
    };
    let mut buf = Vec::new();
    sep.write_csv(&mut buf)?;
    run.write("separation.csv", &buf)?;
    let k = cfg.exhaustive_blocks.unwrap_or(ms.len()).min(ms.len());
    let checks = vec![
        separation_check(&sep.ns[..k], &sep.ms[..k])?,
        Check::new("separation_step_bound", sep.all_bounds_ok(), format!("{} bound", sep.strategy.as_str())),
    ];
    run.finish("separate", cfg, checks, json!({ "blocks": ms.len(), "checked": k, "max_N": sep.ns.iter().max() }))
}

// density

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityRunConfig {
    /// `geo:B` for `δ_j = B·2^{-j}`, or `list:d1,d2,...`.
    pub schedule: String,
    pub steps: usize,
    pub r_list: Vec<f64>,
    pub eps0: f64,
    pub l: u32,
    pub gauge: Option<RefinementGauge>,
    pub grid: usize,
    /// Samples per removed arc for the vanishing check.
    pub per_arc: usize,
    /// Points of `h` written to density.csv.
    pub plot_points: usize,
}

impl Default for DensityRunConfig {
    fn default() -> Self {
        let d = DensityConfig::default();
        Self {
            schedule: "geo:0.4".into(),
            steps: 6,
            r_list: vec![d.r],
            eps0: d.eps0,
            l: d.l,
            gauge: None,
            grid: 1 << 16,
            per_arc: 64,
            plot_points: 1024,
        }
    }
}

pub fn parse_delta_schedule(spec: &str, steps: usize) -> Result<Vec<f64>> {
    let bad = || Error::Parse { pos: 0, msg: format!("schedule '{spec}' is not geo:B or list:d1,d2,...") };
    let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "geo" => Ok(geometric_deltas(arg.trim().parse().map_err(|_| bad())?, steps)),
        "list" => {
            let all: Vec<f64> = arg.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
            if steps > all.len() {
                return Err(invalid(format!("{steps} steps but {} deltas", all.len())));
            }
            Ok(all[..steps].to_vec())
        }
        _ => Err(bad()),
    }
}

pub fn run_density(cfg: &DensityRunConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let (checks, report) = density_into(&mut run, cfg)?;
    run.finish("density", cfg, checks, report)
}

fn density_into(run: &mut RunDir, cfg: &DensityRunConfig) -> Result<(Vec<Check>, Value)> {
    let deltas = parse_delta_schedule(&cfg.schedule, cfg.steps)?;
    let base = DensityConfig { r: cfg.r_list.first().copied().unwrap_or(1.5), eps0: cfg.eps0, l: cfg.l };
    let gauge = cfg.gauge.unwrap_or(RefinementGauge::ExpLogSquared);
    let (density, gauge_sum) = build_intersection_density(&deltas, gauge, &cfg.r_list, base)?;
    run.write_json("density_set.json", &density.set)?;

    let mut table = Table::new(&[
        "r", "j", "N", "delta", "norm_lower", "norm_upper", "factor_upper", "gamma", "cap", "cap_alt", "ao_ratio", "ao_ok",
    ]);
    let mut checks = Vec::new();
    let delta_sum: f64 = deltas.iter().sum();
    for led in &density.ledgers {
        for r in &led.rows {
            table.push(row![
                led.r, r.j, r.n, r.delta, r.norm_lower, r.norm_upper, r.factor_upper, r.gamma, r.cap, r.cap_alt, r.ao_ratio, r.ao_ok
            ]);
        }
        let last = led.rows.last().ok_or_else(|| invalid("empty ledger"))?;
        let pow_sum: f64 = deltas.iter().map(|d| d.powf(led.r - 1.0)).sum();
        let cap = (delta_sum + led.c * pow_sum).exp();
        checks.push(Check::new(
            format!("norm_cap_r={}", led.r),
            last.norm_upper <= cap,
            format!("||h||_A{} <= {} <= {cap} with c = {}", led.r, last.norm_upper, led.c),
        ));
        checks.push(Check::new(
            format!("almost_orthogonality_r={}", led.r),
            led.rows.iter().all(|r| r.ao_ok),
            "ratio <= e^gamma at every accepted step",
        ));
        checks.push(Check::new(format!("ledger_r={}", led.r), led.all_ok(), "every row within its cap"));
    }
    run.write_table("ledger.csv", &table)?;

    let samples = density.samples(cfg.grid);
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    checks.push(Check::new(
        "density_range",
        lo >= -DENSITY_TOL && hi <= 1.0 + DENSITY_TOL,
        format!("h in [{lo}, {hi}] on {} points", cfg.grid),
    ));
    let excluded = density.excluded_sup(cfg.per_arc);
    checks.push(Check::new("density_vanishes", excluded < DENSITY_TOL, format!("sup on removed arcs {excluded:e}")));
    let (mean, mean_err) = density.product.mean()?;
    let floor = density.mean_floor();
    checks.push(Check::new(
        "density_mean",
        mean - mean_err >= floor - CERT_TOL,
        format!("h^(0) = {mean} +- {mean_err:e} vs floor {floor}"),
    ));

    let mut plot = Table::new(&["t", "h"]);
    for i in 0..cfg.plot_points {
        let t = i as f64 / cfg.plot_points as f64;
        plot.push(row![t, density.product.value(t)]);
    }
    run.write_table("density.csv", &plot)?;

    let report = json!({
        "deltas": deltas,
        "mean": mean,
        "mean_floor": floor,
        "gauge_sum": gauge_sum,
        "constants": density.ledgers.iter().map(|l| json!({ "r": l.r, "c": l.c, "c_alt": l.c_alt })).collect::<Vec<_>>(),
    });
    Ok((checks, report))
}

// capacity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityRunConfig {
    pub p_list: Vec<f64>,
    /// Target of each KAT stage; the first entry is the single-stage target.
    pub stage_epsilons: Vec<f64>,
    /// Extra set read from a set.json of an earlier run.
    pub set: Option<PathBuf>,
}

impl Default for CapacityRunConfig {
    fn default() -> Self {
        Self { p_list: vec![4.0, 6.0], stage_epsilons: vec![0.5, 0.25], set: None }
    }
}

pub fn run_capacity(cfg: &CapacityRunConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let extra = match &cfg.set {
        Some(path) => Some(serde_json::from_str::<CompactSet>(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    let mut cap = Table::new(&["set", "p", "q", "lower", "upper", "lower_witness", "upper_witness", "sandwich_ok"]);
    let mut trend = Table::new(&["p", "stage", "epsilon", "M", "delta", "stage_upper", "upper", "measure", "measure_floor"]);
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for &p in &cfg.p_list {
        let (rows, stages) = capacity_zero_trend(&cfg.stage_epsilons, p)?;
        for (r, s) in rows.iter().zip(&stages) {
            trend.push(row![
                p, r.stage, r.epsilon, s.approximant.m(), s.approximant.delta, r.stage_upper, r.upper, r.measure, r.measure_floor
            ]);
        }
        let first = &stages[0];
        let measure = first.measure.unwrap_or(first.measure_floor);
        checks.push(Check::new(
            format!("kat_stage_p={p}"),
            first.achieved && measure >= 1.0 - first.epsilon,
            format!("||f_M - 1||_A{p} <= {} with m(E) = {measure}", first.norm.upper),
        ));
        if rows.len() >= 2 {
            checks.push(Check::new(
                format!("two_stage_p={p}"),
                rows[1].upper < rows[0].upper,
                format!("{} < {}", rows[1].upper, rows[0].upper),
            ));
        }

        let mut sets: Vec<(String, CompactSet, Vec<PrimalWitness>)> = vec![
            ("circle".into(), CompactSet::new(vec![])?, vec![]),
            ("half_arc".into(), CompactSet::from_pairs(&[(1, 0.5)])?, vec![PrimalWitness::One]),
        ];
        let mut witnesses = vec![PrimalWitness::One];
        let mut gens = Vec::new();
        for (s, stage) in stages.iter().enumerate() {
            witnesses.push(PrimalWitness::Kat(stage.approximant.clone()));
            gens.extend(stage.approximant.set()?.generations().iter().copied());
            sets.push((format!("kat{}", s + 1), CompactSet::new(gens.clone())?, witnesses.clone()));
        }
        if let Some(e) = &extra {
            sets.push(("input".into(), e.clone(), vec![PrimalWitness::One]));
        }
        for (name, set, primal) in &sets {
            let est = estimate(set, p, primal)?;
            cap.push(row![
                name.as_str(),
                p,
                est.q,
                est.lower,
                est.upper,
                est.lower_witness.as_str(),
                est.upper_witness.as_str(),
                est.sandwich_ok()
            ]);
            checks.push(Check::new(
                format!("sandwich_{name}_p={p}"),
                est.sandwich_ok(),
                format!("{} <= {}", est.lower, est.upper),
            ));
        }
        report.push(json!({ "p": p, "stages": stages.iter().map(|s| json!({
            "epsilon": s.epsilon, "M": s.approximant.m(), "delta": s.approximant.delta,
            "norm_upper": s.norm.upper, "lemma_bound": s.lemma_bound, "measure": s.measure,
        })).collect::<Vec<_>>() }));
    }
    run.write_table("capacity.csv", &cap)?;
    run.write_table("capacity_trend.csv", &trend)?;
    run.finish("capacity", cfg, checks, json!({ "schemes": report }))
}

// outer

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuterRunConfig {
    pub omega: String,
    pub stages: usize,
    /// `δ_j = scale/j²` unless `deltas` is given.
    pub scale: f64,
    pub deltas: Option<Vec<f64>>,
    /// Defaults to `ε_j = δ_j`.
    pub epsilons: Option<Vec<f64>>,
    pub eta: f64,
    pub grid: usize,
    pub shifts: Vec<u64>,
    /// Coefficients per stage written to outer_decay.csv.
    pub decay_terms: usize,
}

impl Default for OuterRunConfig {
    fn default() -> Self {
        Self {
            omega: "1/log(2+n)".into(),
            stages: 6,
            scale: 0.3,
            deltas: None,
            epsilons: None,
            eta: DEFAULT_ETA,
            grid: OUTER_GRID,
            shifts: vec![0, 1, 2],
            decay_terms: 2048,
        }
    }
}

pub fn run_outer(cfg: &OuterRunConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let (checks, report) = outer_into(&mut run, cfg)?;
    run.finish("outer", cfg, checks, report)
}

fn outer_into(run: &mut RunDir, cfg: &OuterRunConfig) -> Result<(Vec<Check>, Value)> {
    let omega = OmegaGauge::parse(&cfg.omega)?;
    let mut stages = OuterStagesConfig::inverse_square(cfg.stages, cfg.scale, omega);
    if let Some(d) = &cfg.deltas {
        stages.deltas = d.clone();
    }
    stages.epsilons = cfg.epsilons.clone();
    stages.eta = cfg.eta;
    stages.grid = cfg.grid;
    stages.shifts = cfg.shifts.clone();
    let (cert, specs) = sa_certificate(&stages)?;

    let mut table = Table::new(&[
        "j", "delta", "eps", "a", "N", "ln_N", "a1_lower", "a1_upper", "f0", "offarc_sup", "negative_energy", "gate",
        "weighted_sum", "gate_ok", "sup_e_sampled",
    ]);
    let mut ann = Table::new(&["j", "shift", "value"]);
    for r in &cert.rows {
        table.push(row![
            r.j, r.delta, r.eps, r.a, r.n.to_string(), r.n.ln(), r.a1_lower, r.a1_upper, r.f0, r.offarc_sup,
            r.negative_energy, r.gate, r.weighted_sum, r.gate_ok, r.sup_e_sampled
        ]);
        for (s, v) in cfg.shifts.iter().zip(&r.annihilation) {
            ann.push(row![r.j, *s, *v]);
        }
    }
    run.write_table("stages.csv", &table)?;
    run.write_table("annihilation.csv", &ann)?;

    let mut decay = Table::new(&["j", "n", "abs"]);
    for (j, spec) in specs.iter().enumerate() {
        for n in 0..=cfg.decay_terms as i64 {
            decay.push(row![j + 1, n as u64, spec.coeff(n).norm()]);
        }
    }
    run.write_table("outer_decay.csv", &decay)?;

    let mut checks: Vec<Check> = specs
        .iter()
        .enumerate()
        .map(|(j, s)| {
            Check::new(
                format!("outer_properties_j={}", j + 1),
                s.properties_ok(CERT_TOL),
                format!("F(0) = {:e}, off-arc sup {}, negative energy {:e}", s.f0, s.offarc_sup, s.negative_energy),
            )
        })
        .collect();
    checks.push(Check::new(
        "simultaneous_approximation",
        cert.all_ok(CERT_TOL),
        "gates met and decreasing, sup over E within eps_j",
    ));
    Ok((checks, json!({ "omega": cert.omega, "measure_floor": cert.measure_floor })))
}

// transfer

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferRunConfig {
    pub phi: String,
    pub measure: LineMeasure,
    pub xi_max: f64,
    pub points: usize,
    pub integer_checks: u64,
    pub doubling_limit: f64,
    pub c_target: f64,
}

impl Default for TransferRunConfig {
    fn default() -> Self {
        let t = TransferConfig::default();
        Self {
            phi: "1/(1+t)".into(),
            measure: LineMeasure::Lebesgue,
            xi_max: t.xi_max,
            points: t.points,
            integer_checks: t.integer_checks,
            doubling_limit: t.doubling_limit,
            c_target: t.c_target,
        }
    }
}

pub fn run_transfer(cfg: &TransferRunConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let phi = OmegaGauge::parse(&cfg.phi)?;
    let tc = TransferConfig {
        xi_max: cfg.xi_max,
        points: cfg.points,
        integer_checks: cfg.integer_checks,
        doubling_limit: cfg.doubling_limit,
        c_target: cfg.c_target,
    };
    let rep = kahane_transfer(&cfg.measure, &phi, &tc)?;
    let mut table = Table::new(&["xi", "abs_mu", "phi"]);
    for &(xi, v, b) in &rep.samples {
        table.push(row![xi, v, b]);
    }
    run.write_table("transfer.csv", &table)?;
    let checks = vec![Check::new(
        "transfer",
        rep.violations == 0 && rep.c_fit <= cfg.c_target,
        format!("C = {} with {} violations", rep.c_fit, rep.violations),
    )];
    let report = json!({ "c_fit": rep.c_fit, "doubling": rep.doubling, "integer_ratio": rep.integer_ratio });
    run.finish("transfer", cfg, checks, report)
}

// asymmetry-demo

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub build: BuildConfig,
    pub density: DensityRunConfig,
    pub outer: OuterRunConfig,
}

/// The ℓ^q uniqueness set and its divergence table next to the positive
/// density and the one-sided outer approximation, in one directory.
pub fn run_demo(cfg: &DemoConfig, out: &Path) -> Result<RunOutcome> {
    let mut run = RunDir::create(out)?;
    let (mut checks, build) = build_into(&mut run, &cfg.build)?;
    let (c, density) = density_into(&mut run, &cfg.density)?;
    checks.extend(c);
    let (c, outer) = outer_into(&mut run, &cfg.outer)?;
    checks.extend(c);
    run.finish("asymmetry-demo", cfg, checks, json!({ "build": build, "density": density, "outer": outer }))
}
