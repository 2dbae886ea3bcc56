//! Experiment dispatch.

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use wvn_core::commutators::{check_all, noncompactness_probe, potential_commutator, wigner_commutator, CommutatorSet};
use wvn_core::hs::{hs_operator, HsMesh};
use wvn_core::lap::{self, flagged_states, lap_scan, local_decay, weight_consistency, LapConfig, LapScan, WeightKind};
use wvn_core::lattice::{self, Boundary, LatticeBox};
use wvn_core::linalg::{spectral_norm, HermitianEigen, SparseMatrix};
use wvn_core::mourre::{
    eigenvalue_census, mourre_constant, varrho_delta, window_annihilation, ProjectorMode,
    SpectralWindow,
};
use wvn_core::smooth::{Bracket, IntegratedBracket, SmoothFunction, SmoothWindow};
use wvn_core::thresholds::{
    energy_set_oracle, solution_curves_2d, threshold_e, threshold_eprime, threshold_report,
    OracleConfig, OracleSummary, Sign, SymbolFunctions,
};
use wvn_core::{ExecPolicy, LinearOperator, ModelSpec, Wigner};

use crate::config::{
    DumpTarget, Expectation, Experiment, HsFunction, MourreOperator, Params, RunConfig, WeightChoice,
};
use crate::output::{Outputs, Verdict, VerdictSummary};
use crate::plot::{Plot, PlotKind, Series};

type Marker = (f64, String);

const ENERGY: &str = "energy E (lattice units)";

fn num(x: f64) -> String {
    x.to_string()
}

fn summary(verdict: Verdict, detail: impl Into<String>) -> VerdictSummary {
    VerdictSummary {
        verdict,
        detail: detail.into(),
    }
}

fn pass_if(ok: bool, detail: impl Into<String>) -> VerdictSummary {
    summary(if ok { Verdict::Pass } else { Verdict::Fail }, detail)
}

fn boxes(cfg: &RunConfig) -> Result<Vec<LatticeBox>> {
    cfg.geometry
        .half_widths
        .iter()
        .map(|&l| Ok(LatticeBox::new(cfg.geometry.d, l, cfg.geometry.boundary)?))
        .collect()
}

fn isotropic_k(model: &ModelSpec) -> Option<f64> {
    match model.wigner {
        Wigner::Isotropic { k, .. } => Some(k),
        _ => None,
    }
}

pub fn run_experiment(cfg: &RunConfig, out: &mut Outputs, policy: ExecPolicy) -> Result<VerdictSummary> {
    let ctx = || format!("experiment {}", cfg.experiment.name());
    let r = match cfg.experiment {
        Experiment::Thresholds => thresholds(cfg, out, policy),
        Experiment::EnergySet => energy_set(cfg, out, policy),
        Experiment::CommutatorCheck => commutator_check(cfg, out),
        Experiment::AnnihilationSweep => annihilation_sweep(cfg, out, policy),
        Experiment::MourreScan => mourre_scan(cfg, out, policy),
        Experiment::LapScan => lap_scan_exp(cfg, out, policy),
        Experiment::Decay => decay(cfg, out),
        Experiment::HsCheck => hs_check(cfg, out),
        Experiment::DumpOperator => dump_operator(cfg, out),
    };
    r.with_context(ctx)
}

fn thresholds(cfg: &RunConfig, out: &mut Outputs, policy: ExecPolicy) -> Result<VerdictSummary> {
    let Params::Thresholds {
        oracle_grid,
        curve_samples,
    } = cfg.params
    else {
        unreachable!()
    };
    let d = cfg.geometry.d;
    let oracle = if d >= 2 && isotropic_k(&cfg.model).is_some() {
        oracle_grid.map(OracleConfig::new)
    } else {
        None
    };
    let report = threshold_report(d, &cfg.model, oracle, policy)?;
    out.json("thresholds.json", &report)?;
    if let Some(k) = isotropic_k(&cfg.model) {
        if d == 1 {
            let s = SymbolFunctions::new(k)?;
            let xs: Vec<f64> = (0..curve_samples)
                .map(|i| 4.0 * i as f64 / (curve_samples - 1) as f64)
                .collect();
            out.csv(
                "symbol_curves.csv",
                &["x", "g_minus", "g_plus", "h_minus", "h_plus"],
                xs.iter().map(|&x| {
                    vec![
                        num(x),
                        num(s.g_minus(x)),
                        num(s.g_plus(x)),
                        num(s.h_branch(Sign::Minus, x)),
                        num(s.h_branch(Sign::Plus, x)),
                    ]
                }),
            )?;
            let curve = |f: &dyn Fn(f64) -> f64| xs.iter().map(|&x| (x, f(x))).collect::<Vec<_>>();
            let plot = Plot {
                title: format!("symbol curves, k = {k:.6}"),
                x_label: ENERGY.into(),
                y_label: "value (lattice units)".into(),
                series: vec![
                    Series::new("g_k;-", curve(&|x| s.g_minus(x))),
                    Series::new("g_k;+", curve(&|x| s.g_plus(x))),
                    Series::new("h_k;-", curve(&|x| s.h_branch(Sign::Minus, x))),
                    Series::new("h_k;+", curve(&|x| s.h_branch(Sign::Plus, x))),
                    Series::new("diagonal", vec![(0.0, 0.0), (4.0, 4.0)]),
                ],
                markers: vec![
                    (report.e_minus.unwrap_or(f64::NAN), "E_-".into()),
                    (report.e_plus.unwrap_or(f64::NAN), "E_+".into()),
                    (s.lambda(Sign::Minus), "lambda_-".into()),
                    (s.lambda(Sign::Plus), "lambda_+".into()),
                ],
            };
            out.plot("symbol_curves.svg", &plot, PlotKind::Line)?;
        } else if d == 2 {
            let curves = solution_curves_2d(k, curve_samples)?;
            let mut rows = Vec::new();
            let mut series = Vec::new();
            for fam in &curves.families {
                let label = fam.label();
                for (p, path) in fam.paths.iter().enumerate() {
                    for &(a, b) in path {
                        rows.push(vec![label.clone(), p.to_string(), num(a), num(b)]);
                    }
                }
                for &(a, b) in &fam.points {
                    rows.push(vec![label.clone(), "point".into(), num(a), num(b)]);
                }
                let mut pieces = fam.paths.clone();
                pieces.extend(fam.points.iter().map(|&p| vec![p]));
                series.push(Series { label, pieces });
            }
            out.csv("solution_curves.csv", &["family", "path", "x1", "x2"], rows)?;
            let plot = Plot {
                title: format!("solution curves, k = {k:.6}"),
                x_label: "x1 (lattice units)".into(),
                y_label: "x2 (lattice units)".into(),
                series,
                markers: Vec::new(),
            };
            out.plot("solution_curves.svg", &plot, PlotKind::Line)?;
        }
    }
    Ok(match &report.oracle {
        Some(o) => pass_if(o.agrees(), format!("oracle deviation {:?}", o.deviation)),
        None => summary(Verdict::Pass, "closed forms evaluated"),
    })
}

fn energy_set(cfg: &RunConfig, out: &mut Outputs, policy: ExecPolicy) -> Result<VerdictSummary> {
    let Params::EnergySet { grid_n, tol, refine } = cfg.params else {
        unreachable!()
    };
    let d = cfg.geometry.d;
    let k = isotropic_k(&cfg.model).expect("validated");
    let oc = OracleConfig {
        grid_n,
        tol_constraint: tol,
        refine,
    };
    let set = energy_set_oracle(d, k, &oc, policy)?;
    let mut header: Vec<String> = (1..=d).map(|i| format!("xi_{i}")).collect();
    header.extend(["energy".to_string(), "branch".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "energy_set.csv",
        &header,
        set.samples.iter().map(|s| {
            let mut row: Vec<String> = s.xi.iter().map(|&x| num(x)).collect();
            row.push(num(s.energy));
            row.push(if s.branch == Sign::Plus { "plus" } else { "minus" }.into());
            row
        }),
    )?;
    let reference = if d == 2 { Some(threshold_e(k)?) } else { None };
    let sum = OracleSummary::from_set(&set, reference);
    out.json(
        "energy_set.json",
        &json!({
            "d": d,
            "k": k,
            "summary": sum,
            "e_of_k": reference,
            "refined_argmin": set.refined_argmin,
            "hull": set.hull(),
        }),
    )?;
    let series = [Sign::Minus, Sign::Plus]
        .iter()
        .map(|&b| {
            Series::new(
                if b == Sign::Plus { "xi + k branch" } else { "xi - k branch" },
                set.samples
                    .iter()
                    .filter(|s| s.branch == b)
                    .map(|s| (s.xi[0], s.energy))
                    .collect(),
            )
        })
        .filter(|s| !s.pieces[0].is_empty())
        .collect::<Vec<_>>();
    if !series.is_empty() {
        let plot = Plot {
            title: format!("constrained energies, d = {d}, k = {k:.6}"),
            x_label: "xi_1 (rad)".into(),
            y_label: ENERGY.into(),
            series,
            markers: Vec::new(),
        };
        out.plot("energy_set.svg", &plot, PlotKind::Scatter)?;
    }
    Ok(match reference {
        Some(_) => pass_if(sum.agrees(), format!("deviation {:?}, energy step {}", sum.deviation, sum.energy_step)),
        None => summary(Verdict::Pass, format!("{} samples", sum.sample_count)),
    })
}

fn commutator_check(cfg: &RunConfig, out: &mut Outputs) -> Result<VerdictSummary> {
    let Params::CommutatorCheck { tol, probe_j_max } = cfg.params else {
        unreachable!()
    };
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for lat in boxes(cfg)? {
        for (name, r) in check_all(&lat, &cfg.model)? {
            worst = worst.max(r.interior);
            rows.push(vec![
                lat.half_width().to_string(),
                name,
                num(r.interior),
                num(r.collar),
                r.interior_sites.to_string(),
            ]);
        }
    }
    out.csv("residuals.csv", &["L", "identity", "interior", "collar", "interior_sites"], rows)?;
    let mut detail = format!("max interior residual {worst:e} (tol {tol:e})");
    if let Some(j_max) = probe_j_max {
        let lat = *boxes(cfg)?.last().expect("validated");
        let (k, b) = wigner_commutator(&lat, &cfg.model)?;
        let bn = noncompactness_probe(&b, &lat, j_max)?;
        let kn = noncompactness_probe(&k, &lat, j_max)?;
        out.csv(
            "noncompactness.csv",
            &["j", "b_norm", "k_norm"],
            bn.iter().zip(&kn).map(|(b, k)| vec![b.0.to_string(), num(b.1), num(k.1)]),
        )?;
        let plot = Plot {
            title: "column norms of the commutator parts".into(),
            x_label: "site j".into(),
            y_label: "norm".into(),
            series: vec![
                Series::new("|B e_j|", bn.iter().map(|&(j, v)| (j as f64, v)).collect()),
                Series::new("|K e_j|", kn.iter().map(|&(j, v)| (j as f64, v)).collect()),
            ],
            markers: Vec::new(),
        };
        out.plot("noncompactness.svg", &plot, PlotKind::Line)?;
        detail.push_str(&format!("; B column norms in [{:e}, {:e}]", min_of(&bn), max_of(&bn)));
    }
    Ok(pass_if(worst <= tol, detail))
}

fn min_of(v: &[(i64, f64)]) -> f64 {
    v.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[(i64, f64)]) -> f64 {
    v.iter().map(|p| p.1).fold(0.0, f64::max)
}

fn annihilation_sweep(cfg: &RunConfig, out: &mut Outputs, policy: ExecPolicy) -> Result<VerdictSummary> {
    let Params::AnnihilationSweep {
        e_min,
        e_max,
        count,
        width,
        margin_fraction,
        sharp,
        snap,
        tol,
    } = cfg.params
    else {
        unreachable!()
    };
    let lat = *boxes(cfg)?.last().expect("validated");
    let mode = if sharp { ProjectorMode::Sharp } else { ProjectorMode::Smooth };
    let centers: Vec<f64> = (0..count)
        .map(|i| e_min + (e_max - e_min) * i as f64 / (count - 1) as f64)
        .collect();
    let results = wvn_core::par::map_slice(policy, &centers, |&c| {
        let w = SpectralWindow::open(c - 0.5 * width, c + 0.5 * width, margin_fraction)?;
        window_annihilation(&lat, &cfg.model, &w, mode, snap)
    });
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut first = None;
    for (&c, r) in centers.iter().zip(results) {
        let a = r?;
        rows.push(vec![num(c), num(a.norm), a.exact_operator_norm.to_string()]);
        points.push((c, a.norm));
        first.get_or_insert(a);
    }
    let first = first.expect("count >= 2");
    out.csv("annihilation.csv", &["center", "norm", "exact_operator_norm"], rows)?;

    // Windows expected to annihilate: isotropic d = 1 away from E_±;
    // separable below E′ (and its mirror image).
    let d = cfg.geometry.d;
    let snapped = &first.snapped_k;
    let (markers, quiet): (Vec<Marker>, Box<dyn Fn(f64) -> bool>) = match &cfg.model.wigner {
        Wigner::Isotropic { .. } if d == 1 => {
            let (em, ep) = wvn_core::thresholds::critical_points_1d(snapped[0])?;
            let half = 0.5 * width;
            (
                vec![(em, "E_-".into()), (ep, "E_+".into())],
                Box::new(move |c: f64| (c - em).abs() > half && (c - ep).abs() > half),
            )
        }
        Wigner::Separable { .. } => {
            let ep = threshold_eprime(snapped)?;
            let top = 4.0 * d as f64;
            let half = 0.5 * width;
            (
                vec![(ep, "E'".into()), (top - ep, "4d-E'".into())],
                Box::new(move |c: f64| c + half < ep || c - half > top - ep),
            )
        }
        _ => (Vec::new(), Box::new(|_| false)),
    };
    let violations: Vec<f64> = points
        .iter()
        .filter(|&&(c, n)| quiet(c) && n > tol)
        .map(|p| p.0)
        .collect();
    out.json(
        "annihilation.json",
        &json!({
            "requested_k": first.requested_k,
            "snapped_k": first.snapped_k,
            "snap_distance": first.snap_distance,
            "circumference": lat.side(),
            "markers": markers,
            "max_norm": points.iter().map(|p| p.1).fold(0.0, f64::max),
            "violations": violations,
        }),
    )?;
    let plot = Plot {
        title: format!("window annihilation sweep, width {width}"),
        x_label: "window center E (lattice units)".into(),
        y_label: "compressed norm".into(),
        series: vec![Series::new("norm", points)],
        markers,
    };
    out.plot("annihilation.svg", &plot, PlotKind::Line)?;
    Ok(pass_if(
        violations.is_empty(),
        format!("{} windows expected to vanish exceed {tol:e}", violations.len()),
    ))
}

fn mourre_scan(cfg: &RunConfig, out: &mut Outputs, policy: ExecPolicy) -> Result<VerdictSummary> {
    let Params::MourreScan {
        operator,
        e_lo,
        e_hi,
        margin_fraction,
    } = cfg.params
    else {
        unreachable!()
    };
    let w = SpectralWindow::open(e_lo, e_hi, margin_fraction)?;
    let d = cfg.geometry.d;
    let theory = if operator == MourreOperator::Laplacian {
        let top = 4.0 * d as f64;
        let n = 400;
        let lo = e_lo.max(0.0);
        let hi = e_hi.min(top);
        let mut best = f64::INFINITY;
        for i in 0..=n {
            best = best.min(varrho_delta(lo + (hi - lo) * i as f64 / n as f64, d)?);
        }
        Some(best)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut negs = Vec::new();
    let mut strict_ok = true;
    for lat in boxes(cfg)? {
        let (t, comm) = match operator {
            MourreOperator::Laplacian => (
                lattice::laplacian(&lat),
                wvn_core::commutators::laplacian_commutator(&lat),
            ),
            MourreOperator::Hamiltonian => {
                let set = CommutatorSet::new(&lat, &cfg.model)?;
                let mut c = set.delta_comm.clone();
                for part in [&set.wigner_k, &set.wigner_b, &set.potential_comm].into_iter().flatten() {
                    c = c.plus(part)?;
                }
                (lattice::hamiltonian(&lat, &cfg.model)?, c)
            }
        };
        let est = mourre_constant(&t, &comm, &w, theory)?;
        if let (Some(th), Some(c)) = (theory, est.c_est) {
            strict_ok &= c >= th - 1e-10 && est.negative_count == 0;
        }
        negs.push(est.negative_count);
        rows.push(vec![
            lat.half_width().to_string(),
            lat.len().to_string(),
            est.rank.to_string(),
            est.c_est.map_or(String::new(), num),
            est.negative_count.to_string(),
            est.below_theory.map_or(String::new(), |x| x.to_string()),
        ]);
    }
    out.csv("mourre.csv", &["L", "dim", "rank", "c_est", "negative_count", "below_theory"], rows)?;
    let census = if operator == MourreOperator::Hamiltonian && cfg.model.wigner != Wigner::None {
        Some(eigenvalue_census(
            &cfg.model,
            d,
            &cfg.geometry.half_widths,
            cfg.geometry.boundary,
            &w.interval,
            policy,
        )?)
    } else {
        None
    };
    if let Some(rows) = &census {
        out.csv(
            "census.csv",
            &["L", "energy", "participation", "drift", "flagged"],
            rows.iter().flat_map(|r| {
                r.states.iter().map(move |s| {
                    vec![
                        r.half_width.to_string(),
                        num(s.energy),
                        num(s.participation),
                        s.drift.map_or(String::new(), num),
                        s.flagged.to_string(),
                    ]
                })
            }),
        )?;
    }
    let plot = Plot {
        title: "negative eigenvalues of the projected commutator".into(),
        x_label: "box half-width L".into(),
        y_label: "count".into(),
        series: vec![Series::new(
            "negative count",
            cfg.geometry
                .half_widths
                .iter()
                .zip(&negs)
                .map(|(&l, &n)| (l as f64, n as f64))
                .collect(),
        )],
        markers: Vec::new(),
    };
    out.plot("mourre.svg", &plot, PlotKind::Line)?;
    out.json(
        "mourre.json",
        &json!({
            "operator": operator,
            "window": w.interval,
            "theory": theory,
            "negative_counts": negs,
            "census_flagged": census.as_ref().map(|c| c.iter().map(|r| r.flagged_count).collect::<Vec<_>>()),
        }),
    )?;
    if theory.is_some() {
        return Ok(pass_if(strict_ok, format!("strict estimate with constant {:?}", theory)));
    }
    let (first, last) = (negs[0], *negs.last().expect("nonempty"));
    let bounded = last <= 2 * first.max(1);
    Ok(summary(
        if bounded { Verdict::Pass } else { Verdict::Inconclusive },
        format!("negative counts {negs:?}"),
    ))
}

fn lap_scan_exp(cfg: &RunConfig, out: &mut Outputs, policy: ExecPolicy) -> Result<VerdictSummary> {
    let Params::LapScan {
        ref e_grid,
        y_count,
        s,
        weight,
        deflate,
        ref expect,
    } = cfg.params
    else {
        unreachable!()
    };
    let kinds: Vec<WeightKind> = match weight {
        WeightChoice::Position => vec![WeightKind::Position],
        WeightChoice::Dilation => vec![WeightKind::Dilation],
        WeightChoice::Both => vec![WeightKind::Position, WeightKind::Dilation],
    };
    let mut scans: Vec<LapScan> = Vec::new();
    for &kind in &kinds {
        let lc = LapConfig {
            e_grid: e_grid.clone(),
            y_count,
            s,
            weight: kind,
            half_widths: cfg.geometry.half_widths.clone(),
            boundary: cfg.geometry.boundary,
            deflate,
        };
        scans.push(lap_scan(&cfg.model, cfg.geometry.d, &lc, policy)?);
    }
    let kind_name = |k: WeightKind| if k == WeightKind::Position { "position" } else { "dilation" };
    out.csv(
        "lap_scan.csv",
        &["E", "y", "s", "L", "weight", "norm", "iters"],
        scans.iter().flat_map(|sc| {
            sc.records.iter().map(|r| {
                vec![
                    num(r.e),
                    num(r.y),
                    num(r.s),
                    r.half_width.to_string(),
                    kind_name(r.weight).to_string(),
                    num(r.norm),
                    r.iterations.to_string(),
                ]
            })
        }),
    )?;
    let consistency = if scans.len() == 2 {
        Some(weight_consistency(&scans[1], &scans[0])?)
    } else {
        None
    };
    // Verdicts come from the last requested weight (dilation when both).
    let main = scans.last().expect("one scan");
    #[derive(Serialize)]
    struct Summary<'a> {
        weights: Vec<&'static str>,
        fits: Vec<&'a [lap::ExponentFit]>,
        deflated: &'a [usize],
        dilation_over_position: Option<Vec<(usize, f64)>>,
        pass_exponent: f64,
        fail_exponent: f64,
    }
    out.json(
        "lap_summary.json",
        &Summary {
            weights: kinds.iter().map(|&k| kind_name(k)).collect(),
            fits: scans.iter().map(|s| s.fits.as_slice()).collect(),
            deflated: &main.deflated,
            dilation_over_position: consistency,
            pass_exponent: lap::PASS_EXPONENT,
            fail_exponent: lap::FAIL_EXPONENT,
        },
    )?;
    let series = main
        .fits
        .iter()
        .map(|f| {
            Series::new(
                format!("E = {:.4}", f.e),
                f.half_widths
                    .iter()
                    .zip(&f.sups)
                    .map(|(&l, &v)| ((2 * l + 1) as f64, v))
                    .collect(),
            )
        })
        .collect();
    let plot = Plot {
        title: format!("sup over y of the weighted resolvent norm ({})", kind_name(*kinds.last().unwrap())),
        x_label: "box size 2L+1".into(),
        y_label: "sup norm".into(),
        series,
        markers: Vec::new(),
    };
    out.plot("lap_scan.svg", &plot, PlotKind::LogLog)?;
    let got: Vec<lap::Verdict> = main.fits.iter().map(|f| f.verdict).collect();
    let detail = main
        .fits
        .iter()
        .map(|f| format!("E={}: {:.3} {:?}", f.e, f.exponent, f.verdict))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(match expect {
        Some(exp) => {
            let matches = exp.iter().zip(&got).all(|(e, g)| {
                matches!(
                    (e, g),
                    (Expectation::Pass, lap::Verdict::Pass)
                        | (Expectation::Fail, lap::Verdict::Fail)
                        | (Expectation::Inconclusive, lap::Verdict::Inconclusive)
                )
            });
            pass_if(matches, detail)
        }
        None => {
            let v = if got.iter().all(|&v| v == lap::Verdict::Pass) {
                Verdict::Pass
            } else if got.contains(&lap::Verdict::Fail) {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            };
            summary(v, detail)
        }
    })
}

fn decay(cfg: &RunConfig, out: &mut Outputs) -> Result<VerdictSummary> {
    let Params::Decay {
        e_lo,
        e_hi,
        margin_fraction,
        s,
        t_max,
        dt,
        ref site,
        max_ratio,
    } = cfg.params
    else {
        unreachable!()
    };
    let lat = boxes(cfg)?[0];
    let h = lattice::hamiltonian(&lat, &cfg.model)?;
    let w = SpectralWindow::open(e_lo, e_hi, margin_fraction)?;
    let origin = vec![0i64; cfg.geometry.d];
    let site = site.as_ref().unwrap_or(&origin);
    let idx = lat
        .index(site)
        .with_context(|| format!("site {site:?} lies outside the box"))?;
    let mut u = vec![C64::new(0.0, 0.0); lat.len()];
    u[idx] = C64::new(1.0, 0.0);
    let defl = if cfg.model.wigner != Wigner::None {
        flagged_states(&cfg.model, cfg.geometry.d, lat.half_width(), cfg.geometry.boundary, &w.interval)?
    } else {
        Vec::new()
    };
    let rec = local_decay(&h, &lat, &w, &u, s, t_max, dt, &defl)?;
    out.csv(
        "decay.csv",
        &["t", "integrand", "integral"],
        rec.series.iter().map(|p| vec![num(p.t), num(p.integrand), num(p.integral)]),
    )?;
    out.json(
        "decay.json",
        &json!({
            "t_max": rec.t_max,
            "s": rec.s,
            "L": rec.half_width,
            "integral": rec.integral,
            "integral_half": rec.integral_half,
            "saturation_ratio": rec.saturation_ratio,
            "mean_rate": rec.mean_rate,
            "unitarity_drift": rec.unitarity_drift,
            "error_bound": rec.error_bound,
            "window_fit_degree": rec.window_fit_degree,
            "window_fit_error": rec.window_fit_error,
            "packet_norm_before_normalization": rec.packet_norm_before_normalization,
            "deflated": defl.len(),
        }),
    )?;
    let plot = Plot {
        title: format!("local decay, s = {s}, L = {}", lat.half_width()),
        x_label: "time t".into(),
        y_label: "integral of the weighted norm squared".into(),
        series: vec![
            Series::new("integral", rec.series.iter().map(|p| (p.t, p.integral)).collect()),
            Series::new("integrand", rec.series.iter().map(|p| (p.t, p.integrand)).collect()),
        ],
        markers: Vec::new(),
    };
    out.plot("decay.svg", &plot, PlotKind::Line)?;
    let unitary = rec.unitarity_drift <= 1e-9;
    if s == 0.0 {
        return Ok(pass_if(
            unitary && (rec.mean_rate - 1.0).abs() <= 0.05,
            format!("slope {}, drift {:e}", rec.mean_rate, rec.unitarity_drift),
        ));
    }
    Ok(pass_if(
        unitary && rec.saturation_ratio <= max_ratio,
        format!("saturation ratio {}, drift {:e}", rec.saturation_ratio, rec.unitarity_drift),
    ))
}

fn random_hermitian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&m + m.adjoint()) * C64::new(scale, 0.0)
}

fn hs_check(cfg: &RunConfig, out: &mut Outputs) -> Result<VerdictSummary> {
    let Params::HsCheck {
        count,
        dim,
        scale,
        ref functions,
        h,
        order,
        tol,
    } = cfg.params
    else {
        unreachable!()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bump = SmoothWindow::new(0.0, 1.0, 2.0)?;
    let bracket = Bracket { power: -2.0 };
    let weight = IntegratedBracket::new(1.0)?;
    let fns: Vec<(&str, &dyn SmoothFunction)> = functions
        .iter()
        .map(|f| -> (&str, &dyn SmoothFunction) {
            match f {
                HsFunction::Window => ("window", &bump),
                HsFunction::Bracket => ("bracket", &bracket),
                HsFunction::Integrated => ("integrated", &weight),
            }
        })
        .collect();
    let fine = HsMesh::with_step(h);
    let coarse = HsMesh::with_step(2.0 * h);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut series: Vec<Series> = fns.iter().map(|(n, _)| Series::new(*n, Vec::new())).collect();
    for m in 0..count {
        let a = random_hermitian(dim, scale, &mut rng);
        let op = LinearOperator::new(format!("A{m}"), SparseMatrix::from_dense(&a), true)?;
        let eig = HermitianEigen::new(&a);
        for (i, (name, f)) in fns.iter().enumerate() {
            let exact = eig.apply_function(|l| C64::new(f.value(l), 0.0));
            let ef = spectral_norm(&(hs_operator(*f, &op, order, fine)?.matrix().to_dense() - &exact));
            let ec = spectral_norm(&(hs_operator(*f, &op, order, coarse)?.matrix().to_dense() - &exact));
            worst = worst.max(ef);
            min_ratio = min_ratio.min(ec / ef);
            rows.push(vec![m.to_string(), name.to_string(), num(h), num(ef)]);
            rows.push(vec![m.to_string(), name.to_string(), num(2.0 * h), num(ec)]);
            series[i].pieces[0].push((m as f64, ef));
        }
    }
    out.csv("hs_check.csv", &["matrix", "function", "h", "error"], rows)?;
    out.json(
        "hs_check.json",
        &json!({
            "seed": cfg.seed,
            "count": count,
            "dim": dim,
            "order": order,
            "h": h,
            "max_error": worst,
            "min_refinement_factor": min_ratio,
            "tol": tol,
        }),
    )?;
    let plot = Plot {
        title: format!("quadrature error at h = {h}"),
        x_label: "matrix index".into(),
        y_label: "operator norm error".into(),
        series,
        markers: Vec::new(),
    };
    out.plot("hs_check.svg", &plot, PlotKind::Scatter)?;
    Ok(pass_if(
        worst <= tol && min_ratio >= 2.0,
        format!("max error {worst:e}, min refinement factor {min_ratio}"),
    ))
}

fn dump_operator(cfg: &RunConfig, out: &mut Outputs) -> Result<VerdictSummary> {
    let Params::DumpOperator { operator } = cfg.params else {
        unreachable!()
    };
    let lat = boxes(cfg)?[0];
    let m = &cfg.model;
    let op = match operator {
        DumpTarget::Laplacian => lattice::laplacian(&lat),
        DumpTarget::Wigner => lattice::wigner(&lat, m)?,
        DumpTarget::Potential => lattice::potential(&lat, m)?,
        DumpTarget::Hamiltonian => lattice::hamiltonian(&lat, m)?,
        DumpTarget::Dilation => lattice::dilation_generator(&lat),
        DumpTarget::WignerK => wigner_commutator(&lat, m)?.0,
        DumpTarget::WignerB => wigner_commutator(&lat, m)?.1,
        DumpTarget::LaplacianCommutator => wvn_core::commutators::laplacian_commutator(&lat),
        DumpTarget::PotentialCommutator => potential_commutator(&lat, m)?,
    };
    if op.dim() == 0 {
        bail!("empty operator");
    }
    out.text("operator.txt", &op.export(&lat)?)?;
    out.json(
        "operator.json",
        &json!({
            "label": op.label(),
            "dim": op.dim(),
            "nnz": op.matrix().nnz(),
            "hermitian": op.is_hermitian(),
            "box": lat.descriptor(),
            "boundary": lat.boundary() == Boundary::Periodic,
        }),
    )?;
    Ok(summary(Verdict::Pass, format!("{} with {} nonzeros", op.label(), op.matrix().nnz())))
}
