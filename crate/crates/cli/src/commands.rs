use crate::config::{JobConfig, Method};
use crate::io::{fmt_f64, write_json, Table};
use anyhow::Result;
use clap::ValueEnum;
use num_complex::Complex64;
use saltus_core::response::{
    counterexample_one, counterexample_two, fd_experiment, response_scan, CounterexampleTable,
};
use saltus_core::saltus::{saltus_from_exact, saltus_from_hybrid, weighted_jump, OrbitJump, SaltusDecomposition};
use saltus_core::smooth::SmoothFn;
use saltus_core::susceptibility::{
    abel_diagnostic, coefficients_split, markov_extension, psi1_nonmarkov, regularized_at_one,
    regularized_psi, residue_fit, AbelDiagnostic, Pole, Psi1, RegularizedAtOne, RegularizedPsi,
    ResidueFit,
};
use saltus_core::transfer::{
    exact_from_orbit, invariant_density_hybrid, invariant_density_ulam, HybridBvFunction,
    PiecewiseConstantDensity,
};
use saltus_core::unimodal::{critical_orbit, CriticalOrbitInfo, Perturbation, UnimodalMap};
use saltus_core::Error;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Orbit,
    Density,
    Decompose,
    Susceptibility,
    Residues,
    Psi1,
    Regularized,
    Counterexample1,
    Counterexample2,
    ResponseScan,
    FdExperiment,
}

impl Subcommand {
    pub fn name(self) -> String {
        self.to_possible_value().unwrap().get_name().to_string()
    }
}

/// Every JSON artifact carries the resolved configuration next to its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub subcommand: Subcommand,
    pub config: JobConfig,
    #[serde(flatten)]
    pub record: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub orbit: Vec<f64>,
    pub code: String,
    pub preperiodic: Option<(usize, usize)>,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DecomposeRecord {
    pub orbit: Vec<f64>,
    pub jumps: Vec<OrbitJump>,
    pub J_of_X: f64,
    pub J_of_1: f64,
    pub preperiodic: Option<(usize, usize)>,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub z_re: f64,
    pub z_im: f64,
    pub residue_re: f64,
    pub residue_im: f64,
}

impl From<&Pole> for PoleRecord {
    fn from(p: &Pole) -> Self {
        PoleRecord { z_re: p.z.re, z_im: p.z.im, residue_re: p.residue.re, residue_im: p.residue.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub holomorphic_at_1: bool,
    pub fully_holomorphic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityRecord {
    pub coefficients: Vec<f64>,
    pub orbit_terms: Vec<f64>,
    pub bv_terms: Vec<f64>,
    pub poles: Vec<PoleRecord>,
    pub psi1: Option<f64>,
    pub flags: Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResiduesRecord {
    pub residue_at_1: f64,
    pub fit: ResidueFit,
    pub relative_error: f64,
    pub poles: Vec<PoleRecord>,
    pub flags: Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Psi1Record {
    pub J_of_X: f64,
    pub psi1: Psi1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedRecord {
    pub at_z: RegularizedPsi,
    pub at_one: RegularizedAtOne,
    pub abel: AbelDiagnostic,
    /// Ψ₁ with X ≡ 1, when J(f, 1) vanishes.
    pub psi1: Option<f64>,
}

/// Map, orbit, decomposition and ρ0 as a hybrid function.
struct Prepared {
    f: UnimodalMap,
    orbit: CriticalOrbitInfo,
    dec: SaltusDecomposition,
    rho0: HybridBvFunction,
    exact: Option<PiecewiseConstantDensity>,
}

fn prepare(cfg: &JobConfig, cells: usize) -> Result<Prepared> {
    let f = cfg.build_map()?;
    let mut orbit = critical_orbit(&f, cfg.orbit_max, cfg.revisit_tol)?;
    if orbit.is_markov() && f.tent_slope().is_some() {
        let d = exact_from_orbit(&f, &orbit)?;
        let dec = saltus_from_exact(&d, &orbit, f.a0(), f.b(), cells)?;
        let rho0 = d.to_hybrid(f.a0(), f.b(), cells);
        return Ok(Prepared { f, orbit, dec, rho0, exact: Some(d) });
    }
    if !orbit.is_markov() {
        let depth = cfg.depth.min(orbit.orbit.len());
        orbit = CriticalOrbitInfo::from_parts(orbit.orbit[..depth].to_vec(), f.c(), None);
    }
    let hd = invariant_density_hybrid(&f, cells, cfg.max_iters, cfg.tol)?;
    let dec = saltus_from_hybrid(&hd.density, &orbit, cfg.depth)?;
    Ok(Prepared { f, orbit, dec, rho0: hd.density, exact: None })
}

pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Out<'a> {
    dir: &'a Path,
    sub: Subcommand,
    cfg: &'a JobConfig,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn json<T: Serialize + Clone>(&mut self, name: &str, record: &T) -> Result<()> {
        let path = self.dir.join(name);
        let env = Envelope { subcommand: self.sub, config: self.cfg.clone(), record: record.clone() };
        write_json(&path, &env)?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }
}

fn nodes_table(g: &saltus_core::transfer::GridFunction, header: &[&'static str]) -> Table {
    let mut t = Table::new(header);
    for (x, v) in g.nodes().into_iter().zip(&g.values) {
        t.row(vec![x.into(), (*v).into()]);
    }
    t
}

fn poles_and_flags(
    p: &Prepared,
    x: &Perturbation,
    phi: &SmoothFn,
    tol: f64,
) -> Result<(Vec<PoleRecord>, Flags, f64)> {
    let d = p.exact.as_ref().ok_or(Error::NotMarkov)?;
    let sys = markov_extension(&p.orbit, &p.dec, x, phi, d.integrate(phi), tol)?;
    let flags = Flags { holomorphic_at_1: sys.holomorphic_at_1, fully_holomorphic: sys.fully_holomorphic };
    Ok((sys.poles.iter().map(PoleRecord::from).collect(), flags, sys.residue_at_1))
}

pub fn run(sub: Subcommand, cfg: &JobConfig, dir: &Path) -> Result<Outcome> {
    let mut out = Out { dir, sub, cfg, files: Vec::new() };
    let stem = sub.name().replace('-', "_");
    let summary = match sub {
        Subcommand::Orbit => {
            let f = cfg.build_map()?;
            let o = critical_orbit(&f, cfg.orbit_max, cfg.revisit_tol)?;
            let rec = OrbitRecord {
                orbit: o.orbit.clone(),
                code: o.code.iter().collect(),
                preperiodic: o.preperiodic,
                n_points: o.n_points(),
            };
            let mut t = Table::new(&["k", "c_k", "symbol"]);
            for (i, (&c, &s)) in o.orbit.iter().zip(&o.code).enumerate() {
                t.row(vec![(i + 1).into(), c.into(), s.to_string().into()]);
            }
            out.csv(&format!("{stem}.csv"), &t)?;
            out.json(&format!("{stem}.json"), &rec)?;
            match o.preperiodic {
                Some((n0, n1)) => format!("orbit: preperiodic n0={n0} n1={n1} N={}", o.n_points()),
                None => format!("orbit: not preperiodic within {} points", o.orbit.len()),
            }
        }
        Subcommand::Density => {
            let f = cfg.build_map()?;
            let (lo, hi) = (f.a0(), f.b());
            let markov_tent = || -> Result<Option<PiecewiseConstantDensity>> {
                if f.tent_slope().is_none() {
                    return Ok(None);
                }
                let o = critical_orbit(&f, cfg.orbit_max, cfg.revisit_tol)?;
                Ok(if o.is_markov() { Some(exact_from_orbit(&f, &o)?) } else { None })
            };
            let exact = match cfg.method {
                Method::Auto => markov_tent()?,
                Method::Exact => Some(markov_tent()?.ok_or(Error::NotMarkov)?),
                _ => None,
            };
            let mut t = Table::new(&["x", "value"]);
            let (label, values) = if let Some(d) = &exact {
                let h = (hi - lo) / cfg.bins as f64;
                let xs: Vec<f64> = (0..cfg.bins).map(|i| lo + (i as f64 + 0.5) * h).collect();
                let vals: Vec<f64> = xs.iter().map(|&x| d.eval(x)).collect();
                for (x, v) in xs.iter().zip(&vals) {
                    t.row(vec![(*x).into(), (*v).into()]);
                }
                t.section(&["location", "amplitude"]);
                for (_, x, s) in d.jumps() {
                    t.row(vec![x.into(), s.into()]);
                }
                out.json(&format!("{stem}.json"), d)?;
                ("exact", vals)
            } else if cfg.method == Method::Hybrid {
                let hd = invariant_density_hybrid(&f, cfg.cells, cfg.max_iters, cfg.tol)?;
                let g = &hd.density.regular;
                for (x, v) in g.nodes().into_iter().zip(&g.values) {
                    t.row(vec![x.into(), (*v).into()]);
                }
                t.section(&["location", "amplitude"]);
                for j in hd.density.jumps() {
                    t.row(vec![j.location.into(), j.amplitude.into()]);
                }
                ("hybrid", g.nodes().iter().map(|&x| hd.density.eval(x)).collect())
            } else {
                let d = invariant_density_ulam(&f, cfg.bins, cfg.max_iters, cfg.tol)?;
                for (i, v) in d.values.iter().enumerate() {
                    t.row(vec![d.center(i).into(), (*v).into()]);
                }
                t.section(&["location", "amplitude"]);
                ("ulam", d.values.clone())
            };
            out.csv(&format!("{stem}.csv"), &t)?;
            let (mn, mx) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            format!("density: method={label} rows={} min={} max={}", values.len(), fmt_f64(mn), fmt_f64(mx))
        }
        Subcommand::Decompose => {
            let p = prepare(cfg, cfg.cells)?;
            let x = cfg.perturbation()?;
            let jx = weighted_jump(&p.dec, &x);
            let j1 = weighted_jump(&p.dec, &Perturbation::one());
            let rec = DecomposeRecord {
                orbit: p.dec.jumps.iter().map(|j| j.location).collect(),
                jumps: p.dec.jumps.clone(),
                J_of_X: jx.value,
                J_of_1: j1.value,
                preperiodic: p.dec.preperiodic,
                tail_bound: jx.tail_bound.max(j1.tail_bound),
            };
            out.json(&format!("{stem}.json"), &rec)?;
            out.csv("rho_r.csv", &nodes_table(&p.dec.regular, &["x", "value"]))?;
            format!(
                "decompose: jumps={} J_of_1={} J_of_X={}",
                rec.jumps.len(),
                fmt_f64(rec.J_of_1),
                fmt_f64(rec.J_of_X)
            )
        }
        Subcommand::Susceptibility => {
            let p = prepare(cfg, cfg.series_cells)?;
            let (x, phi) = (cfg.perturbation()?, cfg.observable());
            let s = coefficients_split(&p.f, &p.orbit, &p.dec, &x, &phi, cfg.n_terms, cfg.series_cells)?;
            let (poles, flags, psi1) = if p.exact.is_some() {
                let (poles, flags, _) = poles_and_flags(&p, &x, &phi, cfg.tol)?;
                (poles, flags, None)
            } else {
                let j = weighted_jump(&p.dec, &x);
                let zero = j.value.abs() <= cfg.tol + j.tail_bound;
                let psi1 = if zero {
                    Some(psi1_nonmarkov(&p.f, &p.orbit, &p.dec, &p.rho0, &x, &phi, cfg.tol, cfg.n_terms)?.value)
                } else {
                    None
                };
                (Vec::new(), Flags { holomorphic_at_1: zero, fully_holomorphic: zero }, psi1)
            };
            let rec = SusceptibilityRecord {
                coefficients: s.coefficients.clone(),
                orbit_terms: s.orbit_terms.clone(),
                bv_terms: s.bv_terms.clone(),
                poles,
                psi1,
                flags,
            };
            let mut t = Table::new(&["n", "a_n", "orbit_term", "bv_term", "partial_sum"]);
            for (n, ps) in s.partial_sums().into_iter().enumerate() {
                t.row(vec![n.into(), s.coefficients[n].into(), s.orbit_terms[n].into(), s.bv_terms[n].into(), ps.into()]);
            }
            out.csv(&format!("{stem}.csv"), &t)?;
            out.json(&format!("{stem}.json"), &rec)?;
            format!(
                "susceptibility: terms={} growth={} poles={} holomorphic_at_1={}",
                s.len(),
                fmt_f64(s.growth_rate(s.len() / 2)),
                rec.poles.len(),
                flags.holomorphic_at_1
            )
        }
        Subcommand::Residues => {
            let p = prepare(cfg, cfg.series_cells)?;
            let (x, phi) = (cfg.perturbation()?, cfg.observable());
            let (poles, flags, r1) = poles_and_flags(&p, &x, &phi, cfg.tol)?;
            let s = coefficients_split(&p.f, &p.orbit, &p.dec, &x, &phi, cfg.n_terms, cfg.series_cells)?;
            let fit = residue_fit(&s)?;
            let relative_error = if r1 != 0.0 { (fit.value - r1).abs() / r1.abs() } else { fit.value.abs() };
            let rec = ResiduesRecord { residue_at_1: r1, fit, relative_error, poles, flags };
            let mut t = Table::new(&["z_re", "z_im", "residue_re", "residue_im"]);
            for q in &rec.poles {
                t.row(vec![q.z_re.into(), q.z_im.into(), q.residue_re.into(), q.residue_im.into()]);
            }
            out.csv(&format!("{stem}.csv"), &t)?;
            out.json(&format!("{stem}.json"), &rec)?;
            format!(
                "residues: residue_at_1={} fit={} relative_error={}",
                fmt_f64(r1),
                fmt_f64(rec.fit.value),
                fmt_f64(relative_error)
            )
        }
        Subcommand::Psi1 => {
            let p = prepare(cfg, cfg.series_cells)?;
            let (x, phi) = (cfg.perturbation()?, cfg.observable());
            let j = weighted_jump(&p.dec, &x);
            let psi1 = psi1_nonmarkov(&p.f, &p.orbit, &p.dec, &p.rho0, &x, &phi, cfg.tol, cfg.n_terms)?;
            let rec = Psi1Record { J_of_X: j.value, psi1 };
            out.json(&format!("{stem}.json"), &rec)?;
            format!(
                "psi1: value={} outer={} resolvent={} truncation={}",
                fmt_f64(rec.psi1.value),
                fmt_f64(rec.psi1.outer),
                fmt_f64(rec.psi1.resolvent),
                fmt_f64(rec.psi1.truncation)
            )
        }
        Subcommand::Regularized => {
            let p = prepare(cfg, cfg.series_cells)?;
            let phi = cfg.observable();
            let z = Complex64::new(cfg.z_re, cfg.z_im);
            let at_z = regularized_psi(&p.f, &p.orbit, &p.dec, &phi, z, cfg.n_terms, cfg.series_cells)?;
            let at_one = regularized_at_one(&p.f, &p.orbit, &p.dec, &phi, cfg.n_terms, cfg.series_cells)?;
            let abel = abel_diagnostic(&p.f, &p.orbit, &phi, cfg.n_terms);
            let one = Perturbation::one();
            let psi1 = match psi1_nonmarkov(&p.f, &p.orbit, &p.dec, &p.rho0, &one, &phi, cfg.tol, cfg.n_terms) {
                Ok(v) => Some(v.value),
                Err(Error::NonzeroJump(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let rec = RegularizedRecord { at_z, at_one, abel, psi1 };
            out.json(&format!("{stem}.json"), &rec)?;
            format!(
                "regularized: psi_tilde(z)={}{:+}i psi_tilde(1)={} psi1={}",
                fmt_f64(rec.at_z.value.re),
                rec.at_z.value.im,
                fmt_f64(rec.at_one.value),
                rec.psi1.map(fmt_f64).unwrap_or_else(|| "null".into())
            )
        }
        Subcommand::Counterexample1 => {
            let table = counterexample_one(cfg.k_min..=cfg.k_max, cfg.table_bins)?;
            write_table(&mut out, &stem, &["k", "lambda_k", "gap", "bound", "ratio"], &table)?;
            table_summary("counterexample1", &table)
        }
        Subcommand::Counterexample2 => {
            let table = counterexample_two(&cfg.ells, cfg.table_bins)?;
            write_table(&mut out, &stem, &["ell", "nu_ell", "gap", "bound", "ratio"], &table)?;
            table_summary("counterexample2", &table)
        }
        Subcommand::ResponseScan => {
            let f = cfg.build_map()?;
            let (x, phi) = (cfg.perturbation()?, cfg.observable());
            let scan = response_scan(&f, &x, &phi, &cfg.t_schedule, cfg.bins, cfg.method.for_response())?;
            let mut t = Table::new(&["t", "response", "l1_distance", "tlogt_ratio", "exact"]);
            for i in 0..scan.t.len() {
                t.row(vec![
                    scan.t[i].into(),
                    scan.response[i].into(),
                    scan.l1_distance[i].into(),
                    scan.tlogt_ratio[i].into(),
                    scan.exact[i].into(),
                ]);
            }
            out.csv(&format!("{stem}.csv"), &t)?;
            out.json(&format!("{stem}.json"), &scan)?;
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "null".into());
            format!(
                "response-scan: rows={} reference={} l1_exponent={} response_exponent={}",
                scan.t.len(),
                fmt_f64(scan.reference),
                opt(scan.l1_exponent),
                opt(scan.response_exponent)
            )
        }
        Subcommand::FdExperiment => {
            let f = cfg.build_map()?;
            let (x, phi) = (cfg.perturbation()?, cfg.observable());
            let rep = fd_experiment(&f, &x, &phi, &cfg.t_schedule, cfg.bins, cfg.n_terms, cfg.series_cells, cfg.tol)?;
            let mut t = Table::new(&["t", "quotient", "quotient_coarse", "difference"]);
            for i in 0..rep.t.len() {
                t.row(vec![rep.t[i].into(), rep.quotient[i].into(), rep.quotient_coarse[i].into(), rep.difference[i].into()]);
            }
            out.csv(&format!("{stem}.csv"), &t)?;
            out.json(&format!("{stem}.json"), &rep)?;
            format!(
                "fd-experiment: rows={} psi_abel={} psi_partial_sum={}",
                rep.t.len(),
                fmt_f64(rep.psi_abel),
                fmt_f64(rep.psi_partial_sum)
            )
        }
    };
    Ok(Outcome { summary, files: out.files })
}

fn write_table(out: &mut Out, stem: &str, header: &[&'static str], table: &CounterexampleTable) -> Result<()> {
    let mut t = Table::new(header);
    for r in &table.rows {
        t.row(vec![r.index.into(), r.parameter.into(), r.gap.into(), r.bound.into(), r.ratio.into()]);
    }
    out.csv(&format!("{stem}.csv"), &t)?;
    out.json(&format!("{stem}.json"), table)
}

fn table_summary(name: &str, t: &CounterexampleTable) -> String {
    format!(
        "{name}: rows={} fitted_constant={} min_ratio={} relative_spread={}",
        t.rows.len(),
        fmt_f64(t.fitted_constant),
        fmt_f64(t.min_ratio),
        fmt_f64(t.relative_spread)
    )
}
