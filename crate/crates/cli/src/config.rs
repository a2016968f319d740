use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rcausal_core::polytope::{Limits, VPolyhedron};
use rcausal_core::scenario::Scenario;
use rcausal_core::Q;
use serde_json::{json, Value};

use crate::GlobalArgs;

/// Everything a command needs besides its own arguments.
pub struct RunConfig {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub limits: Limits,
    pub seed: u64,
    /// `None` means uniform.
    pub input_weights: Option<Vec<Q>>,
}

impl RunConfig {
    pub fn from_args(g: &GlobalArgs) -> Result<Self> {
        let scenario = match (&g.scenario, &g.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Scenario::parse(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            (None, Some(name)) => Scenario::preset(name)?,
            (None, None) => bail!("give --scenario PATH or --preset NAME"),
        };
        let mut limits = Limits::default();
        if let Some(n) = g.max_rows {
            if n == 0 {
                bail!("--max-rows must be positive");
            }
            limits.max_rows = n;
        }
        if let Some(n) = g.max_vertices {
            if n == 0 {
                bail!("--max-vertices must be positive");
            }
            limits.max_vertices = n;
        }
        if let Some(s) = g.time_budget {
            if s == 0 {
                bail!("--time-budget must be positive");
            }
            limits.time_budget = Some(Duration::from_secs(s));
        }
        limits.progress_interval = (g.progress > 0).then(|| Duration::from_secs(g.progress));
        if let Some(w) = g.workers {
            if w == 0 {
                bail!("--workers must be positive");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build_global()
                .context("configuring worker threads")?;
        }
        let input_weights = match g.input_dist.as_str() {
            "uniform" => None,
            path => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                let w: Vec<Q> = text
                    .split_whitespace()
                    .map(|t| t.parse::<Q>().map_err(|e| anyhow::anyhow!("{path}: {e}")))
                    .collect::<Result<_>>()?;
                let n = scenario.layout().n_in();
                if w.len() != n {
                    bail!("{path}: {} weights for {n} input assignments", w.len());
                }
                if w.iter().any(Q::is_negative) || w.iter().sum::<Q>() != Q::one() {
                    bail!("{path}: weights must be non-negative and sum to 1");
                }
                Some(w)
            }
        };
        fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
        Ok(RunConfig {
            scenario,
            out: g.out.clone(),
            limits,
            seed: g.seed,
            input_weights,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        log::info!("wrote {}", p.display());
        Ok(())
    }

    /// Writes `<kind>.json` with the provenance header and `body` merged in.
    pub fn report(&self, kind: &str, body: Value) -> Result<()> {
        let mut doc = json!({
            "tool": "rcausal",
            "version": env!("CARGO_PKG_VERSION"),
            "analysis": kind,
            "scenario": self.scenario.name,
            "scenario_hash": self.scenario.hash(),
        });
        if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
            d.extend(b);
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(&format!("{kind}.json"), &text)
    }
}

pub fn read_vertices(path: &Path, dim: usize) -> Result<Vec<Vec<Q>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v = VPolyhedron::parse_vertices(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    if !v.vertices.is_empty() && v.dim != dim {
        bail!("{}: vertices have {} coordinates, scenario has {dim}", path.display(), v.dim);
    }
    Ok(v.vertices)
}
