use katugampola::{
    audit_trace, blowup_threshold, boundary_limit, exact_solution, gamma_fn, generalized_derivative,
    int_by_parts_sides, left_derivative, left_integral, power_hilfer_closed, power_integral_closed,
    semigroup_residual, solve_ivp, supersolution, sweep, AuditReport, Candidate, FnProfile,
    Grading, Mesh, PowerRhs, ProblemParams, ScaledPower, Side, SweepCell, SweepMode,
};

use crate::config::RunConfig;
use crate::output::{
    write_rows, AuditRow, SolveRow, SweepRow, VerifyRow, AUDIT_HEADER, SOLVE_HEADER,
    SWEEP_HEADER, VERIFY_HEADER,
};
use crate::{CliError, EXIT_AUDIT, EXIT_BLOWUP, EXIT_CONFIG, EXIT_CONTRADICTION, EXIT_OK, EXIT_VERIFY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Solve,
    Sweep,
    Audit,
}

/// Runs a command and maps errors to exit code 1 with a message on stderr.
pub fn run(command: Command, config: &RunConfig) -> i32 {
    let result = match command {
        Command::Verify => cmd_verify(config),
        Command::Solve => cmd_solve(config),
        Command::Sweep => cmd_sweep(config),
        Command::Audit => cmd_audit(config),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn pool(config: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs()?)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

struct Checks(Vec<VerifyRow>);

impl Checks {
    /// Relative comparison, absolute when the expected value is zero.
    fn push(&mut self, id: &str, params: String, computed: f64, expected: f64, tolerance: f64) {
        let err = if expected == 0.0 {
            computed.abs()
        } else {
            (computed - expected).abs() / expected.abs()
        };
        self.0.push(VerifyRow {
            check_id: id.to_string(),
            params,
            computed,
            expected,
            rel_error: err,
            tolerance,
            pass: err <= tolerance,
        });
    }
}

/// Worst relative deviation over ten evenly spaced interior nodes, returned
/// with the numeric and exact values at that node.
fn worst_over_probes(
    mesh: &Mesh,
    numeric: impl Fn(usize) -> f64,
    exact: impl Fn(f64) -> f64,
) -> (f64, f64, f64) {
    let n = mesh.n();
    let mut worst = (0.0, 0.0, -1.0);
    for k in 1..=10 {
        let j = (k * n / 10).max(1);
        let (got, want) = (numeric(j), exact(mesh.z()[j]));
        let rel = (got - want).abs() / want.abs();
        if rel > worst.2 {
            worst = (got, want, rel);
        }
    }
    worst
}

pub fn cmd_verify(config: &RunConfig) -> Result<i32, CliError> {
    config.params()?;
    let (n, q) = config.mesh_n(4096)?;
    let n = n + n % 2;
    let left = |rho: f64| Mesh::new(1.0, 2.0, rho, n, q, Grading::Left);
    let mut checks = Checks(Vec::new());

    for alpha in [0.25, 0.5, 0.75] {
        for sigma in [0.5, 1.0, 2.0] {
            for rho in [0.5, 1.0, 2.0] {
                let mesh = left(rho)?;
                let p = ScaledPower::new(1.0, sigma - 1.0, 1.0, rho);
                let oracle = power_integral_closed(&p, alpha)?;
                let g = if sigma >= 1.0 {
                    left_integral(&FnProfile::plain(move |z: f64| z.powf(sigma - 1.0)), alpha, &mesh)?
                } else {
                    left_integral(&p, alpha, &mesh)?
                };
                let (got, want, _) = worst_over_probes(&mesh, |j| g.value_at(j), |z| oracle.eval_z(z));
                checks.push(
                    "integral_oracle",
                    format!("alpha={alpha};sigma={sigma};rho={rho}"),
                    got,
                    want,
                    1e-4,
                );
            }
        }
    }

    let one = FnProfile::plain(|_| 1.0);
    let mesh1 = left(1.0)?;
    let g = left_integral(&one, 0.5, &mesh1)?;
    checks.push("constant_rho1", "alpha=0.5;t=2".into(), g.value_at(n), 1.0 / gamma_fn(1.5)?, 1e-5);

    for alpha in [0.25, 0.5, 0.75] {
        for rho in [0.5, 1.0, 2.0] {
            let mesh = left(rho)?;
            let p = ScaledPower::new(1.0, alpha - 1.0, 1.0, rho);
            let d = left_derivative(&p, alpha, &mesh, None)?;
            let worst = d.values()[1..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            checks.push("kernel_annihilation", format!("alpha={alpha};rho={rho}"), worst, 0.0, 1e-4);
        }
    }

    let half = ScaledPower::new(1.0, 0.5, 1.0, 1.0);
    for (a, b) in [(0.3, 0.4), (0.25, 0.5)] {
        let r1 = semigroup_residual(&one, a, b, &mesh1)?;
        checks.push("semigroup", format!("f=1;alpha={a};beta2={b}"), r1, 0.0, 1e-5);
        let r2 = semigroup_residual(&half, a, b, &mesh1)?;
        checks.push("semigroup", format!("f=z^0.5;alpha={a};beta2={b}"), r2, 0.0, 1e-5);
    }

    for rho in [1.0, 2.0] {
        let mesh = Mesh::new(1.0, 2.0, rho, n, q, Grading::Both)?;
        let s = int_by_parts_sides(&one, &one, 0.5, &mesh)?;
        let want = mesh.span().powf(1.5) / gamma_fn(2.5)?;
        let tag = format!("g=h=1;alpha=0.5;rho={rho}");
        checks.push("by_parts_residual", tag.clone(), s.residual(), 0.0, 1e-6);
        checks.push("by_parts_lhs", tag.clone(), s.lhs, want, 1e-5 / want);
        checks.push("by_parts_rhs", tag, s.rhs, want, 1e-5 / want);
    }

    for (alpha, beta) in [(0.5, 0.5), (0.7, 0.3)] {
        let params = ProblemParams { alpha, beta, ..Default::default() };
        let gamma = params.gamma();
        for xi in [gamma, gamma + 0.25, 2.0] {
            let p = ScaledPower::new(1.0, xi - 1.0, 1.0, 1.0);
            let d = generalized_derivative(&p, &params, &mesh1, None)?;
            let want = power_hilfer_closed(&p, &params)?;
            let tag = format!("alpha={alpha};beta={beta};xi={xi}");
            if want.coeff == 0.0 {
                let worst = d.values()[1..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                checks.push("generalized_derivative", tag, worst, 0.0, 1e-4);
            } else {
                let (got, w, _) = worst_over_probes(&mesh1, |j| d.value_at(j), |z| want.eval_z(z));
                checks.push("generalized_derivative", tag, got, w, 1e-4);
            }
        }
    }

    let f = ScaledPower::new(1.0, -0.25, 1.0, 1.0);
    let lb = boundary_limit(&f, 0.5, Side::Left, &mesh1)?;
    checks.push("boundary_left", "alpha=0.5;weight=0.25".into(), lb.value, 0.0, 1e-3);
    let both = Mesh::new(1.0, 2.0, 1.0, n, q, Grading::Both)?;
    let rb = boundary_limit(&f, 0.5, Side::Right, &both)?;
    checks.push("boundary_right", "alpha=0.5;weight=0.25".into(), rb.value, 0.0, 1e-3);

    let params = ProblemParams { beta: 0.0, m: 3.0, ..Default::default() };
    let y = exact_solution(&params)?.power;
    let lhs = power_hilfer_closed(&y, &params)?;
    checks.push(
        "power_solution_identity",
        "alpha=0.5;beta=0;mu=0;m=3".into(),
        lhs.coeff,
        params.lambda * y.coeff.powf(params.m),
        1e-12,
    );

    let rows = checks.0;
    write_rows(&rows, VERIFY_HEADER, config.format(), config.out.as_deref())?;
    let failed: Vec<&VerifyRow> = rows.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAIL {} [{}]: error {:e} > {:e}", r.check_id, r.params, r.rel_error, r.tolerance);
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_VERIFY })
}

pub fn cmd_solve(config: &RunConfig) -> Result<i32, CliError> {
    let params = config.params()?;
    let cfg = config.solve_config(2048, 2.0)?;
    let rhs = PowerRhs::from_params(&params);
    let trajectory = solve_ivp(&params, &rhs, &cfg)?;
    let sol = &trajectory.solution;
    // the power solution is a reference only when it carries this x_a
    let reference = exact_solution(&params)
        .ok()
        .filter(|e| e.x_a.is_some_and(|xa| (xa - params.x_a).abs() <= 1e-12 * xa.abs()))
        .map(|e| e.power);
    let w = sol.weight_exp();
    let mesh = sol.mesh();
    let rows: Vec<SolveRow> = (0..=mesh.n())
        .map(|j| {
            let z = mesh.z()[j];
            let v = sol.values()[j];
            SolveRow {
                t: mesh.t()[j],
                z,
                x_weighted: v,
                x: sol.value_at(j),
                residual: reference.map(|p| {
                    let exact = if z == 0.0 { p.coeff } else { p.eval_z(z) * z.powf(w) };
                    (v - exact).abs()
                }),
            }
        })
        .collect();
    write_rows(&rows, SOLVE_HEADER, config.format(), config.out.as_deref())?;
    match trajectory.blowup_at {
        Some(t) => {
            eprintln!("solution exceeded the cap near t = {t}");
            Ok(EXIT_BLOWUP)
        }
        None => Ok(EXIT_OK),
    }
}

fn sweep_row(cell: &SweepCell) -> SweepRow {
    let p = &cell.params;
    let (classification, t_blow, norm, levels, error) = match &cell.report {
        Ok(r) => (
            r.classification.as_str().to_string(),
            r.t_blow_estimate,
            Some(r.final_norm),
            Some(r.mesh_levels_used),
            None,
        ),
        Err(e) => ("error".to_string(), None, None, None, Some(e.to_string())),
    };
    SweepRow {
        alpha: p.alpha,
        beta: p.beta,
        mu: p.mu,
        m: p.m,
        m_star: cell.m_star,
        classification,
        t_blow_estimate: t_blow,
        final_norm: norm,
        mesh_levels_used: levels,
        error,
    }
}

/// Sweep cells in the order alpha, mu, m.
pub fn sweep_cells(config: &RunConfig) -> Result<Vec<SweepCell>, CliError> {
    let mut base = config.base_params()?;
    if config.xa.is_none() {
        base = base.with_x_a(1.0);
    }
    let cfg = config.solve_config(400, 50.0)?;
    let alphas = config.alpha_values.clone().unwrap_or(vec![base.alpha]);
    let mus = config.mu_values.clone().unwrap_or(vec![base.mu]);
    let mode = if config.match_global.unwrap_or(true) {
        SweepMode::MatchGlobal
    } else {
        SweepMode::Fixed
    };
    if config.m_values.is_some() && config.m_factors.is_some() {
        return Err(CliError::field("m_factors", "give either m_values or m_factors"));
    }
    for &alpha in &alphas {
        ProblemParams { alpha, ..base }.validate()?;
    }
    let pool = pool(config)?;
    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &mu in &mus {
            let cell_base = ProblemParams { alpha, ..base };
            let ms: Vec<f64> = match (&config.m_values, &config.m_factors) {
                (_, Some(factors)) => match blowup_threshold(&cell_base.with_mu(mu)) {
                    Ok(m_star) => factors.iter().map(|f| f * m_star).collect(),
                    // an invalid mu still yields one error cell per factor
                    Err(_) => factors.clone(),
                },
                (Some(ms), None) => ms.clone(),
                (None, None) => vec![base.m],
            };
            cells.extend(pool.install(|| sweep(&cell_base, &ms, &[mu], &cfg, mode)));
        }
    }
    Ok(cells)
}

pub fn cmd_sweep(config: &RunConfig) -> Result<i32, CliError> {
    let cells = sweep_cells(config)?;
    let rows: Vec<SweepRow> = cells.iter().map(sweep_row).collect();
    write_rows(&rows, SWEEP_HEADER, config.format(), config.out.as_deref())?;
    let bad: Vec<&SweepRow> = cells
        .iter()
        .zip(&rows)
        .filter(|(c, _)| c.contradicts())
        .map(|(_, r)| r)
        .collect();
    for r in &bad {
        eprintln!(
            "contradiction: alpha={} mu={} m={} (m*={:?}) classified {}",
            r.alpha, r.mu, r.m, r.m_star, r.classification
        );
    }
    Ok(if bad.is_empty() { EXIT_OK } else { EXIT_CONTRADICTION })
}

/// Audits a supersolution built for the configured parameters at every
/// configured horizon.
pub fn audit_reports(config: &RunConfig) -> Result<Vec<AuditReport>, CliError> {
    let params = config.base_params()?;
    let horizons = config.horizons()?;
    let settings = config.audit_settings(&params)?;
    blowup_threshold(&params)?;
    let Some(&t_max) = horizons.last() else {
        return Ok(Vec::new());
    };
    let x = supersolution(&params, params.z(t_max))?;
    let x_a = katugampola::audit::initial_value(&x, &params)?;
    let params = params.with_x_a(x_a);
    let pool = pool(config)?;
    Ok(pool.install(|| audit_trace(&params, &horizons, &Candidate::Power(x), &settings))?)
}

pub fn cmd_audit(config: &RunConfig) -> Result<i32, CliError> {
    let reports = audit_reports(config)?;
    let rows: Vec<AuditRow> = reports
        .iter()
        .map(|r| AuditRow {
            t_end: r.t_end,
            theta: r.theta,
            weak_lhs: r.weak_lhs,
            weak_rhs: r.weak_rhs,
            pivot_numeric: r.pivot_numeric,
            pivot_inner: r.pivot_inner,
            constant: r.constant,
            vanishing_bound: r.vanishing_bound,
            holder_nonlinear: r.holder_brackets.0,
            holder_dual: r.holder_brackets.1,
            young_ok: r.young_ok,
            directions_ok: r.directions_ok,
        })
        .collect();
    write_rows(&rows, AUDIT_HEADER, config.format(), config.out.as_deref())?;
    let violated: Vec<f64> = reports.iter().filter(|r| !r.directions_ok).map(|r| r.t_end).collect();
    if !violated.is_empty() {
        eprintln!("inequality direction violated at T = {violated:?}");
        return Ok(EXIT_AUDIT);
    }
    Ok(EXIT_OK)
}
