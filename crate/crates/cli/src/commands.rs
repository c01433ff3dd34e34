use crate::config::RunConfig;
use crate::output::{num, study_svg, Table};
use anyhow::{ensure, Context, Result};
use nalgebra::DMatrix;
use prestrain_lattice::density::{qw, w};
use prestrain_lattice::energies::{integral_representation, InteractionSet};
use prestrain_lattice::lattice::{enumerate_shell, lattice_set, signed_orbit};
use prestrain_lattice::metric::{gaussian_curvature, gaussian_curvature_analytic, EffectiveMetric};
use prestrain_lattice::minimize::{affine_initial_guess, gamma_study, minimize_discrete};
use sha2::{Digest, Sha256};
use std::path::Path;

fn args_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn join(v: &[i64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn lattices(radius_sq: u64, dim: usize, families: bool, out: Option<&Path>) -> Result<()> {
    let resolved = format!("lattices radius_sq={radius_sq} dim={dim} families={families}");
    log::info!("resolved arguments: {resolved}");
    let shell = enumerate_shell(radius_sq, dim)?;
    let mut table = if families {
        Table::new(args_hash(&resolved), &["radius_sq", "zeta", "source", "pivot", "basis", "det", "translations"])
    } else {
        Table::new(args_hash(&resolved), &["radius_sq", "zeta", "nonzero", "orbit_size", "families"])
    };
    for zeta in &shell.members {
        let orbit = signed_orbit(zeta);
        let fams = lattice_set(zeta)?;
        if !families {
            table.push(vec![
                radius_sq.to_string(),
                join(zeta),
                orbit.nonzero_count().to_string(),
                orbit.vectors.len().to_string(),
                fams.len().to_string(),
            ]);
            continue;
        }
        for fam in &fams {
            let columns: Vec<String> = fam.basis.columns().iter().map(|c| join(c)).collect();
            let shifts: Vec<String> = fam.translations.iter().map(|t| join(t)).collect();
            table.push(vec![
                radius_sq.to_string(),
                join(zeta),
                join(&fam.source),
                fam.pivot.to_string(),
                columns.join("; "),
                fam.det().to_string(),
                shifts.join("; "),
            ]);
        }
    }
    table.emit(out)
}

pub fn qw_table(matrix: &str, out: Option<&Path>) -> Result<()> {
    let entries: Vec<f64> = matrix
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("matrix entry {s:?}")))
        .collect::<Result<_>>()?;
    let n = (entries.len() as f64).sqrt().round() as usize;
    ensure!(n >= 1 && n * n == entries.len(), "matrix needs a square number of entries, got {}", entries.len());
    ensure!(entries.iter().all(|v| v.is_finite()), "matrix entries must be finite");
    let m = DMatrix::from_row_slice(n, n, &entries);
    let resolved = format!("qw matrix={}", entries.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
    log::info!("resolved arguments: {resolved}");
    let mut table = Table::new(args_hash(&resolved), &["dim", "W", "QW"]);
    table.push(vec![n.to_string(), num(w(&m)), num(qw(&m))]);
    table.emit(out)
}

fn start(config: &RunConfig) {
    log::info!("resolved configuration (sha256 {}):\n{}", config.hash(), config.resolved());
}

pub fn curvature(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    start(config);
    let domain = config.domain.build()?;
    let metric = config.metric.build()?;
    let effective = EffectiveMetric { base: metric.clone() };
    let (lo, hi) = domain.bounding_box();
    ensure!(lo.len() == 2, "curvature needs a two-dimensional domain");
    let k = config.curvature.grid;
    let h = config.curvature.step;
    let mut table = Table::new(config.hash(), &["x1", "x2", "kappa", "kappa_effective", "kappa_analytic", "error"]);
    for i in 0..k {
        for j in 0..k {
            let x = [
                lo[0] + (i as f64 + 0.5) / k as f64 * (hi[0] - lo[0]),
                lo[1] + (j as f64 + 0.5) / k as f64 * (hi[1] - lo[1]),
            ];
            if !domain.contains(&x) {
                continue;
            }
            let row = gaussian_curvature(&metric, &x, h).and_then(|kappa| {
                let eff = gaussian_curvature(&effective, &x, h)?;
                let exact = gaussian_curvature_analytic(&metric, &x)?;
                Ok((kappa, eff, exact))
            });
            let mut cells = vec![num(x[0]), num(x[1])];
            match row {
                Ok((kappa, eff, exact)) => {
                    cells.extend([num(kappa), num(eff), exact.map(num).unwrap_or_default(), String::new()])
                }
                Err(e) => cells.extend([num(f64::NAN), num(f64::NAN), String::new(), e.to_string()]),
            }
            table.push(cells);
        }
    }
    table.emit(out)
}

pub fn energy(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    start(config);
    let domain = config.domain.build()?;
    let metric = config.metric.build()?;
    let cutoff = config.cutoff()?;
    let deformation = config.deformation.as_ref().context("energy needs a [deformation] section")?;
    let mut header = vec!["epsilon".to_string(), "nodes".into(), "interactions".into(), "E".into()];
    header.extend(cutoff.terms().iter().map(|t| format!("E_r2_{}", t.radius_sq)));
    header.push("error".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(config.hash(), &header);
    for eps in config.eps.values() {
        let result = deformation.sample(&domain, eps, config.seed).and_then(|u| {
            let set = InteractionSet::build(&u, &metric, &cutoff, &domain)?;
            Ok((u.len(), set.len(), set.energy(u.values()), set.per_shell(u.values())))
        });
        let mut row = vec![num(eps)];
        match result {
            Ok((nodes, count, e, shells)) => {
                row.extend([nodes.to_string(), count.to_string(), num(e)]);
                row.extend(shells.into_iter().map(num));
                row.push(String::new());
            }
            Err(err) => {
                row.extend([String::new(), String::new(), num(f64::NAN)]);
                row.extend(cutoff.terms().iter().map(|_| num(f64::NAN)));
                row.push(format!("{err:#}"));
            }
        }
        table.push(row);
    }
    table.emit(out)
}

pub fn represent(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    start(config);
    let domain = config.domain.build()?;
    let metric = config.metric.build()?;
    let cutoff = config.cutoff()?;
    let deformation = config.deformation.as_ref().context("represent needs a [deformation] section")?;
    let mut header: Vec<String> =
        ["epsilon", "E", "I", "gap", "bound", "bound_margin"].iter().map(|s| s.to_string()).collect();
    for t in cutoff.terms() {
        header.push(format!("I_r2_{}", t.radius_sq));
        header.push(format!("bound_r2_{}", t.radius_sq));
    }
    header.push("error".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(config.hash(), &header);
    for eps in config.eps.values() {
        let result = deformation
            .sample(&domain, eps, config.seed)
            .and_then(|u| Ok(integral_representation(&u, &metric, &cutoff, &domain, &Default::default())?));
        let mut row = vec![num(eps)];
        match result {
            Ok(r) => {
                row.extend([num(r.discrete), num(r.represented), num(r.gap), num(r.bound), num(r.bound_margin)]);
                for s in &r.shells {
                    row.extend([num(s.represented), num(s.bound)]);
                }
                row.push(String::new());
            }
            Err(err) => {
                row.extend((0..5 + 2 * cutoff.terms().len()).map(|_| num(f64::NAN)));
                row.push(format!("{err:#}"));
            }
        }
        table.push(row);
    }
    table.emit(out)
}

pub fn minimize(config: &RunConfig, out: Option<&Path>) -> Result<()> {
    start(config);
    let domain = config.domain.build()?;
    let metric = config.metric.build()?;
    let cutoff = config.cutoff()?;
    let options = config.discrete_options()?;
    let mut table = Table::new(
        config.hash(),
        &[
            "epsilon",
            "nodes",
            "initial",
            "min_energy",
            "smoothed",
            "iterations",
            "grad_norm",
            "converged",
            "stalled",
            "error",
        ],
    );
    for eps in config.eps.values() {
        let result = (|| -> Result<_> {
            let init = match &config.deformation {
                Some(d) => d.sample(&domain, eps, config.seed)?,
                None => affine_initial_guess(&metric, &domain, eps)?,
            };
            let initial = InteractionSet::build(&init, &metric, &cutoff, &domain)?.energy(init.values());
            let s = minimize_discrete(&metric, &cutoff, &domain, &init, &options)?;
            Ok((init.len(), initial, s))
        })();
        let row = match result {
            Ok((nodes, initial, s)) => vec![
                num(eps),
                nodes.to_string(),
                num(initial),
                num(s.value),
                num(s.smoothed_value),
                s.report.iterations.to_string(),
                num(s.report.grad_norm),
                s.report.converged.to_string(),
                s.report.stalled.to_string(),
                String::new(),
            ],
            Err(err) => {
                let mut row = vec![num(eps), String::new()];
                row.extend((0..3).map(|_| num(f64::NAN)));
                row.extend([String::new(), num(f64::NAN), "false".into(), String::new(), format!("{err:#}")]);
                row
            }
        };
        table.push(row);
    }
    table.emit(out)
}

pub fn study(config: &RunConfig, out: Option<&Path>, svg: Option<&Path>) -> Result<()> {
    start(config);
    let domain = config.domain.build()?;
    let metric = config.metric.build()?;
    let case = config.case()?;
    let cutoff = if config.cutoff.is_empty() { case.cutoff() } else { config.cutoff()? };
    ensure!(cutoff == case.cutoff(), "the [[cutoff]] table does not match case {:?}", config.case);
    let result = gamma_study(&metric, &cutoff, &domain, &config.eps.values(), case, &config.study_options()?)?;
    let mut table =
        Table::new(config.hash(), &["kind", "epsilon", "value", "iterations", "grad_norm", "converged", "error"]);
    for r in &result.rows {
        table.push(vec![
            "discrete".into(),
            num(r.eps),
            num(r.value),
            r.iterations.to_string(),
            num(r.grad_norm),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let blank = || String::new();
    table.push(vec![
        "extrapolated".into(),
        blank(),
        result.extrapolated.map(num).unwrap_or_else(|| num(f64::NAN)),
        blank(),
        blank(),
        blank(),
        blank(),
    ]);
    table.push(vec![
        "continuum".into(),
        blank(),
        num(result.continuum),
        blank(),
        blank(),
        blank(),
        result.continuum_error.clone().unwrap_or_default(),
    ]);
    table.emit(out)?;
    if let Some(path) = svg {
        let points: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.eps, r.value)).collect();
        std::fs::write(path, study_svg(&points, Some(result.continuum)))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
