use krylov_core::convergence::{cg_ratio_table, steepest_descent_solve};
use krylov_core::equivalence::equivalence_report;
use krylov_core::fem::{
    alpha_forms, assemble_1d, compare_traces, load_vector, operator_cg_solve, pcg_riesz_solve, refinement_study,
    refinement_study_par, Load,
};
use krylov_core::lanczos::{
    beta_product_identity, correspondence_summary, determinant_identity, lanczos_cholesky_solve, verify_correspondence,
    CorrespondenceRow,
};
use krylov_core::linalg::sym_eigen;
use krylov_core::linalg::vector::{dot, relative_distance};
use krylov_core::poly::{
    conjugate_polys, format_polys, residual_poly_roots, residual_polys, spectral_measure, stieltjes_inner, tk_from_cg,
    Polynomial, RecurrencePoly,
};
use krylov_core::report::{
    write_correspondence, write_equivalence, write_fem_solution, write_pcg_comparison, write_ratio_table, write_refinement,
};
use krylov_core::{cg_solve, SolveOptions};

use crate::input::{emit, load_system, solve_options};
use crate::{CliError, FemArgs, PolyKind, PolysArgs, SystemArgs, Verdict};

const EQUIVALENCE_TOL: f64 = 1e-7;
const CORRESPONDENCE_TOL: f64 = 1e-6;
const DETERMINANT_TOL: f64 = 1e-6;
const BETA_PRODUCT_TOL: f64 = 1e-10;
const DUALITY_TOL: f64 = 1e-8;
const RITZ_TOL: f64 = 1e-8;
const TWO_TERM_SLACK: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const REFINEMENT_RATIO: std::ops::RangeInclusive<f64> = 3.5..=4.5;

pub fn equivalence(args: &SystemArgs) -> Result<Verdict, CliError> {
    let sys = load_system(args)?;
    let opts = solve_options(&args.output)?;
    let rows = equivalence_report(&sys.a, &sys.b, &sys.x0, &opts)?;
    let worst = rows.iter().map(|r| r.max()).fold(0.0, f64::max);
    let mut csv = Vec::new();
    write_equivalence(&mut csv, &rows)?;
    emit(&args.output, &csv)?;
    Ok(Verdict {
        pass: worst <= EQUIVALENCE_TOL,
        summary: format!(
            "equivalence: n={}, {} steps, max pairwise iterate deviation {worst:.3e} (threshold {EQUIVALENCE_TOL:e})",
            sys.a.order(),
            rows.len() - 1
        ),
    })
}

pub fn lanczos(args: &SystemArgs) -> Result<Verdict, CliError> {
    let sys = load_system(args)?;
    let opts = solve_options(&args.output)?;
    let n = sys.a.order();
    let cg = cg_solve(&sys.a, &sys.b, &sys.x0, &opts)?;
    let lz = lanczos_cholesky_solve(&sys.a, &sys.b, &sys.x0, &opts)?;
    let mut rows = verify_correspondence(&cg, &lz)?;
    let ladder = correspondence_summary(&rows);
    let ladder_worst = ladder.values().copied().fold(0.0, f64::max);

    let cg_x = cg.iterates();
    let shared = cg_x.len().min(lz.x_bar.len());
    let mut x_worst = 0.0f64;
    for k in 0..shared {
        let deviation = relative_distance(cg_x[k], &lz.x_bar[k]);
        x_worst = x_worst.max(deviation);
        rows.push(CorrespondenceRow { identity: "x", k, deviation });
    }

    let beta = beta_product_identity(&cg);
    rows.push(CorrespondenceRow { identity: "beta_product", k: cg.iterations(), deviation: beta });

    let mut pass = ladder_worst <= CORRESPONDENCE_TOL && x_worst <= EQUIVALENCE_TOL && beta <= BETA_PRODUCT_TOL;
    let det = match determinant_identity(&cg, &sys.a) {
        Ok(d) => {
            rows.push(CorrespondenceRow { identity: "det", k: n, deviation: d.rel_dev });
            pass &= d.rel_dev <= DETERMINANT_TOL;
            format!("{:.3e}", d.rel_dev)
        }
        Err(krylov_core::Error::NotApplicable(why)) => {
            log::warn!("determinant identity skipped: {why}");
            "n/a".to_string()
        }
        Err(e) => return Err(e.into()),
    };
    for (name, dev) in &ladder {
        log::info!("{name}: {dev:.3e}");
    }
    let mut csv = Vec::new();
    write_correspondence(&mut csv, &rows)?;
    emit(&args.output, &csv)?;
    Ok(Verdict {
        pass,
        summary: format!(
            "lanczos: n={n}, {} steps, ladder {ladder_worst:.3e}, iterates {x_worst:.3e}, β-product {beta:.3e}, determinant {det}",
            cg.iterations()
        ),
    })
}

pub fn polys(args: &PolysArgs) -> Result<Verdict, CliError> {
    let sys = load_system(&args.system)?;
    let opts = solve_options(&args.system.output)?;
    let t = cg_solve(&sys.a, &sys.b, &sys.x0, &opts)?;
    let (alphas, betas) = (t.alphas(), t.betas());
    let k = alphas.len();
    let dump = match args.kind {
        PolyKind::Residual => format_polys(&residual_polys(&alphas, &betas, k)?),
        PolyKind::Conjugate if k == 0 => String::new(),
        PolyKind::Conjugate => format_polys(&conjugate_polys(&alphas, &betas, k - 1)?),
    };

    let r0 = &t.steps[0].r;
    let r0_sq = dot(r0, r0);
    let m = spectral_measure(&sys.a, r0)?;
    let (res, dirs) = (t.residuals(), t.directions());
    let mut duality = 0.0f64;
    for i in 0..res.len() {
        let ri = RecurrencePoly::residual(&alphas, &betas, i)?;
        for j in 0..=i {
            let rj = RecurrencePoly::residual(&alphas, &betas, j)?;
            duality = duality.max((stieltjes_inner(&m, &ri, &rj, false) - dot(res[i], res[j]) / r0_sq).abs());
        }
    }
    for i in 0..dirs.len() {
        let pi = RecurrencePoly::conjugate(&alphas, &betas, i)?;
        for j in 0..=i {
            let pj = RecurrencePoly::conjugate(&alphas, &betas, j)?;
            duality = duality.max((stieltjes_inner(&m, &pi, &pj, true) - sys.a.inner(dirs[i], dirs[j]) / r0_sq).abs());
        }
    }

    let lambda_max = sym_eigen(sys.a.sym()).values.last().copied().unwrap_or(1.0);
    let mut ritz = 0.0f64;
    for j in 1..=k {
        let rj = RecurrencePoly::residual(&alphas, &betas, j)?;
        let scale = (0..=400).map(|i| rj.eval(lambda_max * i as f64 / 400.0).abs()).fold(0.0, f64::max);
        for theta in residual_poly_roots(&tk_from_cg(&alphas[..j], &betas)?) {
            ritz = ritz.max(rj.eval(theta).abs() / scale);
        }
    }
    emit(&args.system.output, dump.as_bytes())?;
    Ok(Verdict {
        pass: duality <= DUALITY_TOL && ritz <= RITZ_TOL,
        summary: format!(
            "polys: n={}, degree {k}, duality {duality:.3e} (threshold {DUALITY_TOL:e}), R_k at Ritz values {ritz:.3e}",
            sys.a.order()
        ),
    })
}

pub fn rates(args: &SystemArgs) -> Result<Verdict, CliError> {
    let sys = load_system(args)?;
    let opts = solve_options(&args.output)?;
    let n = sys.a.order();
    let table = cg_ratio_table(&sys.a, &sys.b, &sys.x0, &opts)?;

    // Steepest descent started on (φ₁ + φ_n)/√2 stays in that plane and
    // contracts by exactly the Kantorovich factor at every step.
    let eig = sym_eigen(sys.a.sym());
    let b_sd: Vec<f64> =
        eig.vectors[0].iter().zip(&eig.vectors[n - 1]).map(|(p, q)| (p + q) / std::f64::consts::SQRT_2).collect();
    let sd_opts = SolveOptions { max_iter: Some(table.rows.len().max(1)), ..opts };
    let sd = steepest_descent_solve(&sys.a, &b_sd, &sys.x0, &sd_opts)?;
    let sd_ratio2: Vec<f64> =
        sd.a_norm_errors.windows(2).take_while(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();

    let two_term = table.two_term_violations(TWO_TERM_SLACK).len();
    let textbook = table.textbook_violations(0.0).len();
    let above = table.ratio2_above_mean().len();
    let mut csv = Vec::new();
    write_ratio_table(&mut csv, &table, &sd_ratio2)?;
    emit(&args.output, &csv)?;
    Ok(Verdict {
        pass: two_term == 0 && textbook == 0,
        summary: format!(
            "rates: n={n}, {} steps, Q={:.6} √-factor={:.6}, two-term violations {two_term}, textbook violations {textbook}, rows with ratio2 > k-term mean {above}",
            table.rows.len(),
            table.q_bound,
            table.sqrt_q_bound
        ),
    })
}

pub fn fem(args: &FemArgs) -> Result<Verdict, CliError> {
    let load = Load::parse(&args.load)?;
    let opts = solve_options(&args.output)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if !(args.c >= 0.0) {
        return Err(CliError::Usage(format!("--c must be nonnegative, got {}", args.c)));
    }
    let mut csv = Vec::new();
    let verdict = if let Some(levels) = args.refine {
        if levels < 2 {
            return Err(CliError::Usage("--refine needs at least 2 levels".into()));
        }
        let rows = if args.output.parallel {
            refinement_study_par(args.n, args.c, load, levels, &opts)?
        } else {
            refinement_study(args.n, args.c, load, levels, &opts)?
        };
        write_refinement(&mut csv, &rows)?;
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
        Verdict {
            pass: ratios.iter().all(|r| REFINEMENT_RATIO.contains(r)),
            summary: format!("fem: {levels} levels from n={}, L2 error ratios {ratios:.4?}", args.n),
        }
    } else {
        let sys = assemble_1d(args.n, args.c)?;
        let f = load_vector(load.source(args.c), &sys);
        let u0 = vec![0.0; args.n];
        let pcg = pcg_riesz_solve(&sys, &f, &u0, &opts)?;
        if args.compare_operator {
            let op = operator_cg_solve(&sys, &f, &u0, &opts)?;
            let dev = compare_traces(&pcg, &op)?;
            let forms = alpha_forms(&sys, &op);
            let gap = forms.iter().map(|f| f.rel_gap).fold(0.0, f64::max);
            log::info!("trace deviations {dev:?}");
            write_pcg_comparison(&mut csv, &pcg, &op, &forms)?;
            Verdict {
                pass: dev.max() <= TRACE_TOL && pcg.converged && op.converged,
                summary: format!(
                    "fem: n={} c={} {}, {} steps, max trace deviation {:.3e} (threshold {TRACE_TOL:e}); displayed α differs by up to {gap:.3e}",
                    args.n,
                    args.c,
                    load.name(),
                    pcg.iterations(),
                    dev.max()
                ),
            }
        } else {
            write_fem_solution(&mut csv, &sys, pcg.final_u(), load.exact(args.c))?;
            Verdict {
                pass: pcg.converged,
                summary: format!(
                    "fem: n={} c={} {}, {} PCG steps, converged={}",
                    args.n,
                    args.c,
                    load.name(),
                    pcg.iterations(),
                    pcg.converged
                ),
            }
        }
    };
    emit(&args.output, &csv)?;
    Ok(verdict)
}
