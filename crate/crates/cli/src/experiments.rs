//! Experiment drivers. Each returns a [`ResultTable`] with rows in a fixed order.

use std::f64::consts::PI;

use arrayloc::array::{average_saaf, classify_uoa, uca, ula};
use arrayloc::efim::{
    anchor_geometry, efim_dynamic_all_unknown, efim_dynamic_known, efim_dynamic_orient_dir_unknown,
    efim_static_full, efim_static_orient_known, efim_static_orient_unknown, schur_complement,
    DynamicMode, StaticMode,
};
use arrayloc::geometry::{
    efim_rank_requirements, geometric_factors, gf2, optimize_anchor_angles, Objective,
    PlacementProblem, TableCell,
};
use arrayloc::linalg::is_singular;
use arrayloc::{
    AnchorNode, ArrayPose, ComplexSampleSeries, EfimResult, Param, Position2D, Scenario,
};
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::table::{Cell, ResultTable};
use crate::CliError;

/// Which closed form evaluates the position EFIM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Pick from the knowledge flags and motion.
    Auto,
    /// Static, phase and orientation known.
    Full,
    /// Static, orientation known, per-element directions.
    Exact,
    /// Static, orientation known, SAAF form.
    FarField,
    /// Static, orientation known, reference moved to the element centroid.
    Centered,
    /// Static, orientation unknown.
    OrientationUnknown,
    /// Moving, orientation and velocity known, narrowband approximation.
    Dynamic,
    /// Moving, orientation and velocity known, coefficients from the sampled pulse.
    DynamicExact,
    /// Moving, orientation and heading unknown.
    HeadingUnknown,
    /// Moving, orientation, heading and speed unknown.
    VelocityUnknown,
}

impl Variant {
    pub fn resolve(self, s: &Scenario) -> Variant {
        if self != Variant::Auto {
            return self;
        }
        let k = s.knowledge;
        if s.motion.is_some() {
            match (k.orientation && k.direction, k.speed) {
                (true, true) => Variant::Dynamic,
                (false, true) => Variant::HeadingUnknown,
                _ => Variant::VelocityUnknown,
            }
        } else if k.phase {
            Variant::Full
        } else if k.orientation {
            Variant::FarField
        } else {
            Variant::OrientationUnknown
        }
    }

    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

/// Position EFIM of `s` under `variant`.
pub fn position_efim(
    s: &Scenario,
    variant: Variant,
    series: Option<&ComplexSampleSeries>,
) -> Result<EfimResult, CliError> {
    Ok(match variant.resolve(s) {
        Variant::Auto => unreachable!("resolved above"),
        Variant::Full => efim_static_full(s)?,
        Variant::Exact => efim_static_orient_known(s, StaticMode::Exact)?,
        Variant::FarField => efim_static_orient_known(s, StaticMode::FarField)?,
        Variant::Centered => efim_static_orient_known(s, StaticMode::Centered)?,
        Variant::OrientationUnknown => efim_static_orient_unknown(s)?.1,
        Variant::Dynamic => efim_dynamic_known(s, DynamicMode::Approx)?,
        Variant::DynamicExact => {
            let series =
                series.ok_or_else(|| CliError::Config("dynamic-exact needs signal.file".into()))?;
            efim_dynamic_known(s, DynamicMode::ExactCoeffs(series))?
        }
        Variant::HeadingUnknown => efim_dynamic_orient_dir_unknown(s)?.1,
        Variant::VelocityUnknown => {
            let full = efim_dynamic_all_unknown(s)?;
            let schur = schur_complement(&full.matrix, &[0, 1])?;
            EfimResult {
                matrix: schur.matrix,
                labels: vec![Param::X, Param::Y],
                source: full.source,
            }
        }
    })
}

/// Root SPEB, infinite for singular EFIMs and degenerate geometry.
fn root_speb(
    s: &Scenario,
    variant: Variant,
    series: Option<&ComplexSampleSeries>,
) -> Result<f64, CliError> {
    match position_efim(s, variant, series) {
        Ok(j) => Ok(j.speb().root()),
        Err(CliError::Core(arrayloc::Error::DegenerateGeometry(_))) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn speb(s: &Scenario, variant: Variant) -> Result<f64, CliError> {
    Ok(position_efim(s, variant, None)?.speb().value)
}

pub fn point(cfg: &ExperimentConfig, variant: Variant) -> Result<ResultTable, CliError> {
    let s = cfg.scenario()?;
    let used = variant.resolve(s);
    let j = position_efim(s, used, cfg.series.as_ref())?;
    let sp = j.speb();
    let gf = geometric_factors(s)?;
    let mut t = ResultTable::new(&[
        ("mode", ""),
        ("j_xx", "1/m^2"),
        ("j_xy", "1/m^2"),
        ("j_yy", "1/m^2"),
        ("speb", "m^2"),
        ("root_speb", "m"),
        ("singular", ""),
        ("gf1_norm", ""),
        ("gf2_norm", ""),
    ]);
    let m = &j.matrix;
    t.push(vec![
        used.name().into(),
        m[(0, 0)].into(),
        m[(0, 1)].into(),
        m[(1, 1)].into(),
        sp.value.into(),
        sp.root().into(),
        sp.singular.into(),
        gf.gf1_norm.into(),
        gf.gf2_norm.into(),
    ]);
    Ok(t)
}

/// Agent positions of the grid, x fastest.
pub fn grid_points(cfg: &ExperimentConfig) -> Result<Vec<Position2D>, CliError> {
    let g = cfg.grid()?;
    let xs = g.xs();
    Ok(g.ys()
        .into_iter()
        .flat_map(|y| xs.iter().map(move |&x| Position2D::new(x, y)))
        .collect())
}

pub fn run_grid(cfg: &ExperimentConfig, variant: Variant) -> Result<ResultTable, CliError> {
    let s = cfg.scenario()?;
    let pts = grid_points(cfg)?;
    let values: Vec<Result<f64, CliError>> = pts
        .par_iter()
        .map(|p| {
            let at = s.with_pose(ArrayPose {
                reference: *p,
                orientation: s.pose.orientation,
            });
            root_speb(&at, variant, cfg.series.as_ref())
        })
        .collect();
    let mut t = ResultTable::new(&[("x", "m"), ("y", "m"), ("root_speb", "m")]);
    for (p, v) in pts.iter().zip(values) {
        t.push(vec![p.x.into(), p.y.into(), v?.into()]);
    }
    Ok(t)
}

fn linspace(lo: f64, hi: f64, n: usize, endpoint: bool) -> Vec<f64> {
    let div = if endpoint { (n - 1) as f64 } else { n as f64 };
    (0..n).map(|i| lo + (hi - lo) * i as f64 / div).collect()
}

/// Root SPEB against orientation, known and unknown, for each bandwidth.
pub fn sweep_orientation(
    cfg: &ExperimentConfig,
    variant: Variant,
) -> Result<ResultTable, CliError> {
    let s = cfg.scenario()?;
    let sw = cfg.sweep()?;
    if s.motion.is_some() {
        return Err(CliError::Config(
            "orientation sweeps are for a static agent; drop [motion]".into(),
        ));
    }
    let known_variant = match variant {
        Variant::Auto => Variant::FarField,
        v => v,
    };
    let betas = if sw.betas.is_empty() {
        vec![s.signal.beta]
    } else {
        sw.betas.clone()
    };
    let psis = linspace(sw.psi.0, sw.psi.1, sw.points, true);
    let jobs: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| psis.iter().map(move |&p| (b, p)))
        .collect();
    let rows: Vec<Result<Vec<Cell>, CliError>> = jobs
        .par_iter()
        .map(|&(beta, psi)| {
            let mut k = s.clone();
            k.signal.beta = beta;
            k.pose.orientation = psi;
            k.knowledge.orientation = true;
            let mut u = k.clone();
            u.knowledge.orientation = false;
            Ok(vec![
                beta.into(),
                psi.into(),
                root_speb(&k, known_variant, None)?.into(),
                root_speb(&u, Variant::OrientationUnknown, None)?.into(),
            ])
        })
        .collect();
    let mut t = ResultTable::new(&[
        ("beta", "Hz"),
        ("psi", "rad"),
        ("root_speb_known", "m"),
        ("root_speb_unknown", "m"),
    ]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

/// Random anchor directions at a fixed range; one row per bandwidth and trial.
pub fn monte_carlo_geometry(
    cfg: &ExperimentConfig,
    seed: Option<u64>,
) -> Result<ResultTable, CliError> {
    let s = cfg.scenario()?;
    let mc = cfg.mc()?;
    let seed = seed
        .or(mc.seed)
        .ok_or_else(|| CliError::Config("geometry-mc needs a seed (mc.seed or --seed)".into()))?;
    if s.motion.is_some() {
        return Err(CliError::Config(
            "geometry-mc is for a static agent; drop [motion]".into(),
        ));
    }
    let trials: Vec<Result<Vec<Vec<Cell>>, CliError>> = (0..mc.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut sc = s.clone();
            sc.anchors = mc
                .snrs
                .iter()
                .map(|&snr| {
                    let a = rng.random_range(mc.directions.0..mc.directions.1);
                    let p = sc.pose.reference;
                    AnchorNode::los(
                        Position2D::new(p.x + mc.range * a.cos(), p.y + mc.range * a.sin()),
                        snr,
                    )
                })
                .collect();
            mc.betas
                .iter()
                .map(|&beta| {
                    let mut k = sc.clone();
                    k.signal.beta = beta;
                    k.knowledge.orientation = true;
                    let mut u = k.clone();
                    u.knowledge.orientation = false;
                    let gf = geometric_factors(&k)?;
                    Ok(vec![
                        beta.into(),
                        trial.into(),
                        gf.gf1_norm.into(),
                        gf.gf2_norm.into(),
                        root_speb(&k, Variant::FarField, None)?.into(),
                        root_speb(&u, Variant::OrientationUnknown, None)?.into(),
                    ])
                })
                .collect()
        })
        .collect();
    let mut per_trial = Vec::with_capacity(mc.trials);
    for t in trials {
        per_trial.push(t?);
    }
    let mut t = ResultTable::new(&[
        ("beta", "Hz"),
        ("trial", ""),
        ("gf1_norm", ""),
        ("gf2_norm", ""),
        ("root_speb_known", "m"),
        ("root_speb_unknown", "m"),
    ]);
    for b in 0..mc.betas.len() {
        for rows in &per_trial {
            t.push(rows[b].clone());
        }
    }
    Ok(t)
}

/// SPEB of a ULA and a UCA of equal diameter against orientation over `[0, 2 pi)`.
pub fn compare_arrays(cfg: &ExperimentConfig, variant: Variant) -> Result<ResultTable, CliError> {
    let s = cfg.scenario()?;
    let cs = cfg.compare()?;
    let psis = linspace(0.0, 2.0 * PI, cs.points, false);
    let mut t = ResultTable::new(&[
        ("elements", ""),
        ("psi", "rad"),
        ("speb_ula", "m^2"),
        ("speb_uca", "m^2"),
    ]);
    for &n in &cs.elements {
        let (a, b) = (ula(n, cs.diameter)?, uca(n, cs.diameter)?);
        let rows: Vec<Result<(f64, f64), CliError>> = psis
            .par_iter()
            .map(|&psi| {
                let mut su = s.clone();
                su.pose.orientation = psi;
                su.array = a.clone();
                let mut sc = su.clone();
                sc.array = b.clone();
                Ok((speb(&su, variant)?, speb(&sc, variant)?))
            })
            .collect();
        for (psi, r) in psis.iter().zip(rows) {
            let (x, y) = r?;
            t.push(vec![n.into(), (*psi).into(), x.into(), y.into()]);
        }
    }
    Ok(t)
}

/// Placement problem for the configured anchors: their intensities and ranges stay, bearings move.
pub fn placement_problem(s: &Scenario) -> Result<PlacementProblem, CliError> {
    let class = classify_uoa(&s.array, 1e-9);
    if !class.uoa {
        return Err(CliError::Config(
            "anchor placement needs an array with orientation-invariant SAAF".into(),
        ));
    }
    let (beta, carrier) = s.signal.recentred();
    let geo = anchor_geometry(s, &s.pose.reference)?;
    if geo.len() < 2 {
        return Err(CliError::Config(
            "anchor placement needs at least 2 LOS anchors".into(),
        ));
    }
    Ok(PlacementProblem {
        lambda: geo.iter().map(|g| g.lambda).collect(),
        range: geo.iter().map(|g| g.range).collect(),
        beta,
        carrier,
        saaf: average_saaf(&s.array),
        elements: s.array.len(),
    })
}

pub fn optimize_anchors(
    cfg: &ExperimentConfig,
    seed: Option<u64>,
) -> Result<ResultTable, CliError> {
    let s = cfg.scenario()?;
    let o = cfg.optimize()?;
    let seed = seed.or(o.seed).unwrap_or(0);
    let p = placement_problem(s)?;
    let obj = if o.known {
        Objective::OrientationKnown
    } else {
        Objective::OrientationUnknown
    };
    let r = optimize_anchor_angles(&p, obj, o.restarts, seed)?;
    let g2 = gf2(&p.lambda, &p.range, &r.phi);
    let n2: f64 = p.lambda.iter().zip(&p.range).map(|(l, d)| l / d).sum();
    let u = p.u();
    let mut t = ResultTable::new(&[
        ("anchor", ""),
        ("phi", "rad"),
        ("u", "1/m^2"),
        ("speb", "m^2"),
        ("gf1_norm", ""),
        ("gf2_norm", ""),
        ("converged", ""),
        ("isotropic", ""),
    ]);
    for (i, phi) in r.phi.iter().enumerate() {
        t.push(vec![
            i.into(),
            (*phi).into(),
            u[i].into(),
            r.speb.into(),
            r.gf1_norm.into(),
            (g2 / n2).into(),
            r.converged.into(),
            r.isotropic.into(),
        ]);
    }
    Ok(t)
}

pub fn rank_table(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<ResultTable, CliError> {
    let seed = seed.or(cfg.rank_seed).unwrap_or(7);
    let mut t = ResultTable::new(&[
        ("cell", ""),
        ("requirement", ""),
        ("anchors", ""),
        ("antennas", ""),
        ("expected_full_rank", ""),
        ("observed_full_rank", ""),
        ("pass", ""),
    ]);
    for cell in TableCell::all() {
        for c in efim_rank_requirements(cell, seed)? {
            t.push(vec![
                cell.label().into(),
                cell.requirement_text().into(),
                c.anchors.into(),
                c.antennas.into(),
                c.expect_full.into(),
                c.observed_full.into(),
                (c.expect_full == c.observed_full).into(),
            ]);
        }
    }
    Ok(t)
}

/// True when the position EFIM of `s` is rank deficient.
pub fn is_rank_deficient(s: &Scenario, variant: Variant) -> Result<bool, CliError> {
    Ok(is_singular(
        &position_efim(s, variant, None)?.matrix,
        arrayloc::efim::SINGULAR_RTOL,
    ))
}
