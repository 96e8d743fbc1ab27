use mocon_core::catalog::{CatalogEntry, SYSTEM_NAMES};
use mocon_core::metric::reduced_blocks;
use serde::Serialize;
use std::collections::BTreeMap;

use super::{load_system, to_rows, DEFAULT_G};
use crate::args::CatalogArgs;
use crate::error::CliResult;
use crate::output::emit_report;
use crate::spec::sized;

#[derive(Serialize)]
struct SystemSummary {
    name: String,
    description: String,
    dim_q: usize,
    dim_u: usize,
    parameters: BTreeMap<String, f64>,
    natural_frequency: f64,
    has_potential: bool,
}

impl From<&CatalogEntry> for SystemSummary {
    fn from(e: &CatalogEntry) -> Self {
        Self {
            name: e.name.clone(),
            description: e.description.clone(),
            dim_q: e.model.dim_q(),
            dim_u: e.model.dim_u(),
            parameters: e.parameters.clone(),
            natural_frequency: e.natural_frequency,
            has_potential: e.potential().is_some(),
        }
    }
}

#[derive(Serialize)]
struct Blocks {
    q: Vec<f64>,
    u: Vec<f64>,
    a: Vec<Vec<f64>>,
    e: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    de_dq: Vec<Vec<Vec<f64>>>,
    /// Largest deviation of the computed blocks from the documented closed forms.
    closed_form_deviation: Option<f64>,
}

#[derive(Serialize)]
struct CatalogReport<'a> {
    command: &'static str,
    config: &'a CatalogArgs,
    systems: Vec<SystemSummary>,
    blocks: Option<Blocks>,
}

pub fn catalog(args: CatalogArgs) -> CliResult<()> {
    let (systems, blocks) = match args.system.as_deref() {
        None => {
            let g = args.g.unwrap_or(DEFAULT_G);
            let systems = SYSTEM_NAMES
                .iter()
                .map(|name| load_system(Some(name), Some(g), None).map(|e| SystemSummary::from(&e)))
                .collect::<CliResult<Vec<_>>>()?;
            (systems, None)
        }
        Some(name) => {
            let entry = load_system(Some(name), args.g, args.pivot_mass)?;
            let blocks = if args.at_q.is_some() || args.at_u.is_some() {
                let q = sized(args.at_q.as_ref(), entry.model.dim_q(), "--at-q")?;
                let u = sized(args.at_u.as_ref(), entry.model.dim_u(), "--at-u")?;
                let b = reduced_blocks(&entry.model, &q, &u)?;
                let closed_form_deviation = entry
                    .closed_form(&q, &u)
                    .map(|(a, e, k)| (&a - &b.a).amax().max((&e - &b.e).amax()).max((&k - &b.k).amax()));
                Some(Blocks {
                    q: q.iter().copied().collect(),
                    u: u.iter().copied().collect(),
                    a: to_rows(&b.a),
                    e: to_rows(&b.e),
                    k: to_rows(&b.k),
                    de_dq: b.de_dq.iter().map(to_rows).collect(),
                    closed_form_deviation,
                })
            } else {
                None
            };
            (vec![SystemSummary::from(&entry)], blocks)
        }
    };
    let report = CatalogReport {
        command: "catalog",
        config: &args,
        systems,
        blocks,
    };
    emit_report(&report, None, "catalog.json")
}
