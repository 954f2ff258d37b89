//! Command execution: bounds tables, the crossover search and the
//! verification suites.

use std::time::Instant;

use lhv_core::bell::{
    bounds_table, chsh_value, crossover_dimension, embedded_chsh_closed, embedded_settings,
    embedded_state, optimize_chsh, p_chsh,
};
use lhv_core::montecarlo::McConfig;
use lhv_core::nielsen::{
    identity_residuals, noise_completion, p_rho, schmidt_frame, source_noisy_state, tilde_rho,
};
use lhv_core::povm::{alice_response_povm, bob_response_povm, p_phi_povm, RankOnePovm};
use lhv_core::projective::{alice_response, p_phi, selfcorr_expected};
use lhv_core::qcore::{
    haar_basis, haar_state, isotropic_state, joint_prob, max_abs_diff, noisy_state,
    ppt_min_eigenvalue, BipartitePureState, ProjectiveMeasurement,
};
use lhv_core::rng::{mix64, RngStream};
use lhv_core::{RMatrix, Result};

use crate::config::{Command, RunConfig};
use crate::parallel;
use crate::report::{
    povm_json, projective_json, Body, CaseRecord, CrossoverRow, Report, RunRecord, Summary, Unit,
};

/// Random inputs per dimension for the response-function checks.
const RESPONSE_INPUTS: usize = 1_000;
const OPTIMIZER_TOL: f64 = 1e-3;

/// Executes `cfg`, which must already be validated.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let body = match cfg.command {
        Command::Bounds => Body::Bounds(bounds_table(&cfg.dims)?),
        Command::Crossover => Body::Crossover(crossover_rows()?),
        Command::VerifyProjective => Body::Cases(per_dim(cfg, verify_projective)?),
        Command::VerifyNielsen => Body::Cases(per_dim(cfg, verify_nielsen)?),
        Command::VerifyPovm => Body::Cases(per_dim(cfg, verify_povm)?),
        Command::VerifyChsh => Body::Cases(per_dim(cfg, verify_chsh)?),
    };
    let (cases, failures) = match &body {
        Body::Bounds(rows) => (rows.len(), rows.iter().filter(|r| !r.is_ordered()).count()),
        Body::Crossover(rows) => {
            let ok = rows.len() == 2 && !rows[0].chsh_below_phi && rows[1].chsh_below_phi;
            (rows.len(), usize::from(!ok))
        }
        Body::Cases(cases) => (cases.len(), cases.iter().filter(|c| !c.pass).count()),
    };
    Ok(Report {
        config: cfg.clone(),
        body,
        summary: Summary {
            cases,
            failures,
            wall_ms: start.elapsed().as_millis() as u64,
        },
    })
}

fn crossover_rows() -> Result<Vec<CrossoverRow>> {
    let d_star = crossover_dimension();
    [d_star - 1, d_star]
        .into_iter()
        .map(|d| {
            let (pc, pp) = (p_chsh(d)?, p_phi(d)?);
            Ok(CrossoverRow {
                d,
                p_chsh: pc,
                p_phi: pp,
                chsh_below_phi: pc < pp,
            })
        })
        .collect()
}

fn per_dim(
    cfg: &RunConfig,
    suite: fn(&Ctx, usize) -> Result<Vec<CaseRecord>>,
) -> Result<Vec<CaseRecord>> {
    let tag = match cfg.command {
        Command::VerifyProjective => 1,
        Command::VerifyNielsen => 2,
        Command::VerifyPovm => 3,
        Command::VerifyChsh => 4,
        _ => 0,
    };
    let ctx = Ctx { cfg, tag };
    let mut out = Vec::new();
    for &d in &cfg.dims {
        out.extend(suite(&ctx, d)?);
    }
    Ok(out)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    tag: u64,
}

impl Ctx<'_> {
    /// Seed of case `idx` at dimension `d`; independent of every other case.
    fn seed(&self, d: usize, idx: u64) -> u64 {
        mix64(mix64(mix64(self.cfg.seed, self.tag), d as u64), idx)
    }

    /// Stream for drawing a case's inputs, disjoint from its sampling chunks.
    fn setup_rng(&self, d: usize, idx: u64) -> RngStream {
        RngStream::new(self.seed(d, idx), u64::MAX)
    }

    fn mc(&self, d: usize, idx: u64) -> Result<McConfig> {
        McConfig::new(self.cfg.samples, self.seed(d, idx), self.cfg.chunk_size)
    }

    fn sigma(&self) -> f64 {
        self.cfg.sigma_tolerance
    }
}

fn random_pure(d: usize, rng: &mut RngStream) -> Result<BipartitePureState> {
    BipartitePureState::new(d, d, haar_state(d * d, rng)?.as_vector().clone())
}

fn verify_projective(ctx: &Ctx, d: usize) -> Result<Vec<CaseRecord>> {
    let mut out = Vec::new();
    let p = p_phi(d)?;
    let oracle_state = isotropic_state(d, p)?;
    for idx in 0..=ctx.cfg.cases as u64 {
        let (q, r, label) = if idx == 0 {
            let c = ProjectiveMeasurement::computational(d)?;
            (c.clone(), c, "computational".to_string())
        } else {
            let mut rng = ctx.setup_rng(d, idx);
            (
                haar_basis(d, &mut rng)?,
                haar_basis(d, &mut rng)?,
                format!("haar #{idx}"),
            )
        };
        let mc = ctx.mc(d, idx)?;
        let est = parallel::mc_joint(&q, &r, &mc)?;
        let oracle = joint_prob(&oracle_state, &q, &r)?;
        let mut run = RunRecord::new(d, mc.seed(), &est, &oracle);
        run.measurements =
            Some(serde_json::json!({ "alice": projective_json(&q), "bob": projective_json(&r) }));
        out.push(CaseRecord::from_run(
            "projective.joint",
            label,
            ctx.sigma(),
            run,
        ));
    }

    let idx = ctx.cfg.cases as u64 + 1;
    let mut rng = ctx.setup_rng(d, idx);
    let r = haar_basis(d, &mut rng)?;
    let mc = ctx.mc(d, idx)?;
    let est = parallel::mc_selfcorr(&r, 0, &mc)?;
    let oracle = RMatrix::from_element(1, 1, selfcorr_expected(d)?);
    let run = RunRecord::new(d, mc.seed(), &est, &oracle);
    out.push(CaseRecord::from_run(
        "projective.selfcorr",
        "haar, outcome 0".into(),
        ctx.sigma(),
        run,
    ));

    let mut rng = ctx.setup_rng(d, idx + 1);
    let mut worst: f64 = 0.0;
    for _ in 0..RESPONSE_INPUTS {
        let q = haar_basis(d, &mut rng)?;
        let lambda = haar_state(d, &mut rng)?;
        let resp = alice_response(&q, &lambda)?;
        worst = worst.max((resp.iter().sum::<f64>() - 1.0).abs());
        worst = worst.max(-resp.iter().cloned().fold(0.0, f64::min));
    }
    out.push(CaseRecord::new(
        d,
        "projective.response",
        format!("{RESPONSE_INPUTS} haar inputs"),
        worst,
        1e-12,
        Unit::Abs,
    ));
    Ok(out)
}

fn verify_nielsen(ctx: &Ctx, d: usize) -> Result<Vec<CaseRecord>> {
    let mut out = Vec::new();
    let p = p_rho(d)?;
    for k in 0..ctx.cfg.cases as u64 {
        let idx = 3 * k;
        let mut rng = ctx.setup_rng(d, idx);
        let psi = random_pure(d, &mut rng)?;
        let (form, ops) = schmidt_frame(&psi)?;
        let res = identity_residuals(&ops)?;
        out.push(CaseRecord::new(
            d,
            "nielsen.identities",
            format!("state #{k}"),
            res.max(),
            1e-10,
            Unit::Abs,
        ));

        let (completed, _, _) = noise_completion(&psi)?;
        let target = noisy_state(&psi.projector(), p)?;
        let diff = max_abs_diff(completed.entries(), target.entries());
        out.push(CaseRecord::new(
            d,
            "nielsen.completion",
            format!("state #{k}"),
            diff,
            1e-12,
            Unit::Abs,
        ));

        let q = haar_basis(d, &mut rng)?;
        let r = haar_basis(d, &mut rng)?;
        let mc = ctx.mc(d, idx + 1)?;
        let est = parallel::mc_joint_extended(&psi, &q, &r, &mc)?;
        let oracle = joint_prob(&tilde_rho(&psi)?, &q, &r)?;
        let mut run = RunRecord::new(d, mc.seed(), &est, &oracle);
        run.schmidt = Some(form.coefficients().to_vec());
        run.measurements =
            Some(serde_json::json!({ "alice": projective_json(&q), "bob": projective_json(&r) }));
        out.push(CaseRecord::from_run(
            "nielsen.joint",
            format!("state #{k}, haar pair"),
            ctx.sigma(),
            run,
        ));
    }
    Ok(out)
}

fn verify_povm(ctx: &Ctx, d: usize) -> Result<Vec<CaseRecord>> {
    let mut out = Vec::new();
    let p = p_phi_povm(d)?;
    let oracle_state = isotropic_state(d, p)?;

    let mut pairs: Vec<(RankOnePovm, RankOnePovm, String)> = Vec::new();
    let comp = RankOnePovm::computational(d)?;
    pairs.push((comp.clone(), comp, "computational".into()));
    if d == 2 {
        pairs.push((RankOnePovm::trine(), RankOnePovm::trine(), "trine".into()));
        pairs.push((
            RankOnePovm::tetrahedral(),
            RankOnePovm::tetrahedral(),
            "tetrahedral".into(),
        ));
    }
    for k in 1..=ctx.cfg.cases as u64 {
        let mut rng = ctx.setup_rng(d, 100 + k);
        let m = RankOnePovm::random(d, d + 1, &mut rng)?;
        let n = RankOnePovm::random(d, d + 2, &mut rng)?;
        pairs.push((m, n, format!("random #{k}")));
    }
    for (idx, (m, n, label)) in pairs.into_iter().enumerate() {
        let mc = ctx.mc(d, idx as u64)?;
        let est = parallel::mc_joint_povm(&m, &n, &mc)?;
        let oracle = joint_prob(&oracle_state, &m, &n)?;
        let mut run = RunRecord::new(d, mc.seed(), &est, &oracle);
        run.measurements =
            Some(serde_json::json!({ "alice": povm_json(&m), "bob": povm_json(&n) }));
        out.push(CaseRecord::from_run("povm.joint", label, ctx.sigma(), run));
    }

    let mut rng = ctx.setup_rng(d, 200);
    let psi = random_pure(d, &mut rng)?;
    let m = RankOnePovm::random(d, d + 1, &mut rng)?;
    let n = RankOnePovm::random(d, d + 1, &mut rng)?;
    let mc = ctx.mc(d, 200)?;
    let est = parallel::mc_joint_extended_povm(&psi, &m, &n, &mc)?;
    let oracle = joint_prob(&source_noisy_state(&psi, p)?, &m, &n)?;
    let mut run = RunRecord::new(d, mc.seed(), &est, &oracle);
    run.schmidt = Some(schmidt_frame(&psi)?.0.coefficients().to_vec());
    run.measurements = Some(serde_json::json!({ "alice": povm_json(&m), "bob": povm_json(&n) }));
    out.push(CaseRecord::from_run(
        "povm.extended",
        "random state, random pair".into(),
        ctx.sigma(),
        run,
    ));

    let mut rng = ctx.setup_rng(d, 201);
    let mut worst: f64 = 0.0;
    for _ in 0..RESPONSE_INPUTS {
        let m = RankOnePovm::random(d, d + 2, &mut rng)?;
        let lambda = haar_state(d, &mut rng)?;
        for resp in [
            alice_response_povm(&m, &lambda)?,
            bob_response_povm(&m, &lambda)?,
        ] {
            worst = worst.max((resp.iter().sum::<f64>() - 1.0).abs());
            worst = worst.max(-resp.iter().cloned().fold(0.0, f64::min));
        }
    }
    out.push(CaseRecord::new(
        d,
        "povm.response",
        format!("{RESPONSE_INPUTS} random inputs"),
        worst,
        1e-12,
        Unit::Abs,
    ));
    Ok(out)
}

fn verify_chsh(ctx: &Ctx, d: usize) -> Result<Vec<CaseRecord>> {
    let mut out = Vec::new();
    let settings = embedded_settings(d)?;
    let threshold = p_chsh(d)?;
    let mut worst: f64 = 0.0;
    for p in [0.0, 0.25, 0.5, threshold, 0.9, 1.0] {
        let v = chsh_value(&embedded_state(d, p)?, &settings)?;
        worst = worst.max((v - embedded_chsh_closed(d, p)).abs());
    }
    out.push(CaseRecord::new(
        d,
        "chsh.identity",
        "embedded settings".into(),
        worst,
        1e-9,
        Unit::Abs,
    ));

    let root = (embedded_chsh_closed(d, threshold) - 2.0).abs();
    out.push(CaseRecord::new(
        d,
        "chsh.root",
        format!("p = {threshold:.12}"),
        root,
        1e-9,
        Unit::Abs,
    ));

    let mut rng = ctx.setup_rng(d, 0);
    let (best, _) = optimize_chsh(&embedded_state(d, threshold)?, ctx.cfg.restarts, &mut rng)?;
    out.push(CaseRecord::new(
        d,
        "chsh.optimizer",
        format!("see-saw, {} restarts, max = {best:.9}", ctx.cfg.restarts),
        (best - 2.0).abs(),
        OPTIMIZER_TOL,
        Unit::Abs,
    ));

    let iso = 1.0 / (d as f64 + 1.0);
    let ppt = ppt_min_eigenvalue(&isotropic_state(d, iso)?)?;
    out.push(CaseRecord::new(
        d,
        "separability.ppt",
        "p = 1/(d+1)".to_string(),
        ppt.abs(),
        1e-9,
        Unit::Abs,
    ));
    Ok(out)
}
