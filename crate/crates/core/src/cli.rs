//! Command-line front end. Every command produces a JSON report, optionally
//! a CSV table for plotting and, for the elliptic branch, the perturbed
//! cocycle file.

use crate::cocycle::{CocycleFile, CocycleSystem};
use crate::dichotomy::{run_dichotomy, run_elliptic, DichotomyOptions, DichotomyVerdict, Verdict};
use crate::domination::{find_splitting, orbit_ratios, SplittingSearch};
use crate::error::{Error, Result};
use crate::genfunc::{
    c1_distance, generating_from_map, glue_to_identity, grid_csv, region, symplectic_defect, BuiltinMap, BumpProfile,
    Chart, Domain, GenOptions, LocalMap, PolyMap, Region,
};
use crate::linalg::{self, Mat};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Symplecticity residuals, norm and paired spectra of a cocycle file.
    Check,
    /// Dominated splittings at every index.
    Dominate,
    /// Dominated splitting or an identity orbit after an ε-perturbation.
    Dichotomy,
    /// Glue a planar map to the identity near the origin.
    Glue,
    /// Build the identity orbit directly.
    Elliptic,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "symcocycle", version, about = "Periodic symplectic cocycles and generating-function gluing")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Cocycle JSON file; for `glue`, a polynomial map file or a built-in
    /// (`identity`, `linear:a`, `standard:k`, `quadratic:a,k`).
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Report path. CSV and cocycle files are written next to it.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long = "ell-max", global = true, default_value_t = 200)]
    pub ell_max: usize,
    /// Symplecticity tolerance (`check`) or closedness tolerance (`glue`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, global = true, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

/// Everything a command produces. `status` is the process exit code.
#[derive(Debug, Clone)]
pub struct Output {
    pub report: Value,
    pub csv: Option<String>,
    pub cocycle: Option<String>,
    pub status: i32,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("--{name} must be positive, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("beta", self.beta)?;
        if let Some(t) = self.tol {
            positive("tol", t)?;
        }
        if self.ell_max == 0 || self.grid < 4 {
            return Err(Error::Invalid("--ell-max must be positive and --grid at least 4".into()));
        }
        Ok(())
    }

    fn input(&self) -> Result<&str> {
        self.input.as_deref().ok_or_else(|| Error::Invalid("--input is required".into()))
    }

    fn system(&self) -> Result<CocycleSystem> {
        let path = self.input()?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
        let file: CocycleFile = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{path}: line {}, column {}: {e}", e.line(), e.column())))?;
        file.into_system()
    }

    fn dichotomy_options(&self) -> DichotomyOptions {
        let mut o = DichotomyOptions { ell_max: self.ell_max, ..Default::default() };
        if self.seed != 0 {
            o.seed = self.seed;
        }
        o
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Output> {
    cfg.validate()?;
    match cfg.command {
        Command::Check => cmd_check(cfg),
        Command::Dominate => cmd_dominate(cfg),
        Command::Dichotomy => cmd_verdict(cfg, false),
        Command::Elliptic => cmd_verdict(cfg, true),
        Command::Glue => cmd_glue(cfg),
    }
}

fn spectrum_csv(sys: &CocycleSystem) -> String {
    let mut out = String::from("orbit,index,re,im,log_modulus\n");
    for o in &sys.orbits {
        for (k, z) in crate::domination::sorted_spectrum(&o.product()).iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", o.id, k + 1, z.re, z.im, z.norm().ln()));
        }
    }
    out
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Output> {
    let mut sys = cfg.system()?;
    if let Some(t) = cfg.tol {
        sys.space = sys.space.clone().with_tol(t);
    }
    let issues = sys.symplectic_issues();
    let mut all_paired = true;
    let orbits: Vec<Value> = sys
        .orbits
        .iter()
        .map(|o| {
            let residuals: Vec<f64> =
                o.letters.iter().map(|m| sys.space.symplectic_residual(m).unwrap_or(f64::INFINITY)).collect();
            let m = o.product();
            let spectrum: Vec<[f64; 2]> = crate::domination::sorted_spectrum(&m).iter().map(|z| [z.re, z.im]).collect();
            let pairing = match sys.space.paired_spectrum(&m) {
                Ok(p) => json!({"paired": true, "residual": p.max_residual()}),
                Err(e) => {
                    all_paired = false;
                    json!({"paired": false, "error": e.to_string()})
                }
            };
            json!({"id": o.id, "period": o.period(), "residuals": residuals, "spectrum": spectrum, "pairing": pairing})
        })
        .collect();
    let transitions: Vec<Value> = sys
        .transitions
        .iter()
        .map(|t| {
            let residuals: Vec<f64> =
                t.letters.iter().map(|m| sys.space.symplectic_residual(m).unwrap_or(f64::INFINITY)).collect();
            json!({"from": t.from, "to": t.to, "length": t.len(), "residuals": residuals})
        })
        .collect();
    let ok = issues.is_empty() && all_paired;
    let report = json!({
        "command": "check",
        "dim": sys.space.dim(),
        "norm": sys.system_norm()?,
        "bound": sys.bound,
        "tolerance": sys.space.tol,
        "orbits": orbits,
        "transitions": transitions,
        "issues": issues,
        "ok": ok,
    });
    Ok(Output { report, csv: Some(spectrum_csv(&sys)), cocycle: None, status: if ok { 0 } else { 1 } })
}

pub fn cmd_dominate(cfg: &RunConfig) -> Result<Output> {
    let sys = cfg.system()?;
    sys.validate()?;
    let mut results = Vec::new();
    let mut csv = None;
    for i in 1..sys.space.dim() {
        match find_splitting(&sys, i, cfg.ell_max)? {
            SplittingSearch::Found { splitting, certificate } => {
                if csv.is_none() {
                    let mut out = String::from("index,orbit,point,n,ratio\n");
                    for (o, (e, f)) in sys.orbits.iter().zip(splitting.e.iter().zip(&splitting.f)) {
                        for (k, row) in orbit_ratios(o, e, f, certificate.horizon).iter().enumerate() {
                            for (n, r) in row.iter().enumerate() {
                                out.push_str(&format!("{i},{},{k},{},{r}\n", o.id, n + 1));
                            }
                        }
                    }
                    csv = Some(out);
                }
                results.push(json!({"i": i, "found": true, "ell": certificate.ell, "certificate": certificate}));
            }
            SplittingSearch::NotFound { reason, .. } => results.push(json!({"i": i, "found": false, "reason": reason})),
        }
    }
    let report = json!({"command": "dominate", "ell_max": cfg.ell_max, "results": results});
    Ok(Output { report, csv, cocycle: None, status: 0 })
}

/// Reloads an emitted cocycle and checks the claimed identity orbit.
fn revalidate(text: &str, point: &str, claimed: f64) -> Result<f64> {
    let sys = CocycleSystem::from_json(text)?;
    sys.validate()?;
    let o = sys.orbit(point)?;
    let d = sys.space.dim();
    let r = linalg::op_norm(&(o.product() - Mat::identity(d, d)));
    if r > claimed.max(crate::dichotomy::IDENTITY_TOL) * (1.0 + 1e-6) {
        return Err(Error::stage("revalidate", format!("reloaded residual {r:.3e} exceeds claimed {claimed:.3e}")));
    }
    Ok(r)
}

pub fn cmd_verdict(cfg: &RunConfig, elliptic_only: bool) -> Result<Output> {
    let sys = cfg.system()?;
    sys.validate()?;
    let opts = cfg.dichotomy_options();
    let v: DichotomyVerdict =
        if elliptic_only { run_elliptic(&sys, cfg.epsilon, &opts)? } else { run_dichotomy(&sys, cfg.epsilon, &opts)? };
    let mut report = v.to_json();
    report["command"] = json!(if elliptic_only { "elliptic" } else { "dichotomy" });
    let (cocycle, csv) = match &v.verdict {
        Verdict::Elliptic(e) => {
            let text = e.system.to_json();
            let r = revalidate(&text, &e.point, e.residual)?;
            report["revalidated_residual"] = json!(r);
            (Some(text), spectrum_csv(&e.system))
        }
        Verdict::Dominated(d) => {
            let ok = d.certificate.revalidate(&sys)?.is_certified();
            if !ok {
                return Err(Error::stage("revalidate", "certificate does not re-validate"));
            }
            report["revalidated"] = json!(true);
            (None, spectrum_csv(&sys))
        }
    };
    Ok(Output { report, csv: Some(csv), cocycle, status: 0 })
}

fn load_map(spec: &str) -> Result<Box<dyn LocalMap>> {
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
        return Ok(Box::new(PolyMap::from_json(&text)?));
    }
    Ok(Box::new(BuiltinMap::parse(spec)?))
}

pub fn cmd_glue(cfg: &RunConfig) -> Result<Output> {
    let spec = cfg.input()?;
    let f = load_map(spec)?;
    let beta = cfg.beta;
    let gen = GenOptions { radius: 2.0 * beta, grid: cfg.grid, tol: cfg.tol.unwrap_or(GenOptions::default().tol) };
    let s_f = Arc::new(generating_from_map(f.as_ref(), &gen)?);
    let profile = BumpProfile::standard(beta, s_f.base)?;
    let glued = glue_to_identity(s_f.clone(), profile)?;

    let domain = Domain::square(1.2 * beta);
    let mut counts = [0usize; 3];
    let (mut defect, mut inner, mut outer) = (0.0f64, 0.0f64, 0.0f64);
    for z in domain.grid(cfg.grid) {
        let (p, _) = glued.map.chart_point(z)?;
        let (v, j) = glued.map.jet(z)?;
        defect = defect.max(symplectic_defect(&j));
        match region(&profile, p) {
            Region::Inner => {
                counts[0] += 1;
                inner = inner.max((v - z).norm());
            }
            Region::Collar => counts[1] += 1,
            Region::Outer => {
                counts[2] += 1;
                outer = outer.max((v - f.eval(z)?).norm());
            }
        }
    }
    let c1 = c1_distance(f.as_ref(), &glued.map, &domain, cfg.grid)?;
    let report = json!({
        "command": "glue",
        "map": spec,
        "beta": beta,
        "grid": cfg.grid,
        "generating": {
            "base": s_f.base,
            "identity_residual": s_f.identity_residual,
            "closedness_residual": s_f.closedness_residual,
        },
        "glue": glued.report,
        "c1_distance": c1,
        "symplectic_defect": defect,
        "inner_error": inner,
        "outer_error": outer,
        "points": {"inner": counts[0], "collar": counts[1], "outer": counts[2]},
    });
    let c = profile.center;
    let chart = Chart { x: (c[0] - beta, c[0] + beta), eta: (c[1] - beta, c[1] + beta) };
    Ok(Output { report, csv: Some(grid_csv(glued.s.as_ref(), &chart, cfg.grid)), cocycle: None, status: 0 })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Writes the report (to stdout without `--output`) and its companions.
pub fn write_outputs(cfg: &RunConfig, out: &Output) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(&out.report).expect("serializable") + "\n";
    match &cfg.output {
        None => print!("{text}"),
        Some(p) => {
            std::fs::write(p, text)?;
            if let Some(csv) = &out.csv {
                std::fs::write(sibling(p, ".csv"), csv)?;
            }
            if let Some(c) = &out.cocycle {
                std::fs::write(sibling(p, ".cocycle.json"), c)?;
            }
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(out) => match write_outputs(cfg, &out) {
            Ok(()) => out.status,
            Err(e) => {
                eprintln!("error: writing output: {e}");
                3
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
