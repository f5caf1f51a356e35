//! Cascaded transmission-efficiency accounting.
//!
//! A link is an ordered chain of elements (taper, waveguide, edge coupler,
//! ...). Each element is given as a linear efficiency, an insertion loss in
//! dB, or a propagation loss per cm times a length. Totals multiply in linear
//! units and add in dB. dB values in reports are transmissions, so a lossy
//! element reads negative.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::numeric::compensated_sum;
use crate::quantities::{db_to_linear, linear_to_db, Efficiency};
use crate::{Error, Result};

/// How an element's transmission is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementLoss {
    Efficiency(f64),
    /// Insertion loss in dB (positive = loss).
    LossDb(f64),
    Propagation { loss_db_per_cm: f64, length_cm: f64 },
}

/// One-sigma uncertainty on an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Uncertainty {
    Db(f64),
    Linear(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct LinkElement {
    pub name: String,
    pub loss: ElementLoss,
    pub uncertainty: Option<Uncertainty>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loss_db_per_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_linear: Option<f64>,
}

impl TryFrom<RawElement> for LinkElement {
    type Error = Error;

    fn try_from(r: RawElement) -> Result<Self> {
        let loss = match (r.efficiency, r.loss_db, r.loss_db_per_cm, r.length_cm) {
            (Some(e), None, None, None) => ElementLoss::Efficiency(e),
            (None, Some(db), None, None) => ElementLoss::LossDb(db),
            (None, None, Some(per_cm), Some(len)) => ElementLoss::Propagation {
                loss_db_per_cm: per_cm,
                length_cm: len,
            },
            _ => {
                return Err(Error::domain(format!(
                    "element '{}' needs exactly one of efficiency, loss_db, or loss_db_per_cm + length_cm",
                    r.name
                )))
            }
        };
        let uncertainty = match (r.sigma_db, r.sigma_linear) {
            (None, None) => None,
            (Some(s), None) => Some(Uncertainty::Db(s)),
            (None, Some(s)) => Some(Uncertainty::Linear(s)),
            _ => return Err(Error::domain(format!("element '{}' has both sigma_db and sigma_linear", r.name))),
        };
        let el = LinkElement {
            name: r.name,
            loss,
            uncertainty,
        };
        el.resolved_efficiency()?;
        Ok(el)
    }
}

impl From<LinkElement> for RawElement {
    fn from(e: LinkElement) -> Self {
        let mut r = RawElement {
            name: e.name,
            ..Default::default()
        };
        match e.loss {
            ElementLoss::Efficiency(v) => r.efficiency = Some(v),
            ElementLoss::LossDb(v) => r.loss_db = Some(v),
            ElementLoss::Propagation {
                loss_db_per_cm,
                length_cm,
            } => {
                r.loss_db_per_cm = Some(loss_db_per_cm);
                r.length_cm = Some(length_cm);
            }
        }
        match e.uncertainty {
            Some(Uncertainty::Db(s)) => r.sigma_db = Some(s),
            Some(Uncertainty::Linear(s)) => r.sigma_linear = Some(s),
            None => {}
        }
        r
    }
}

/// η = 10^(−loss·length/10).
pub fn propagation_efficiency(loss_db_per_cm: f64, length_cm: f64) -> Result<Efficiency> {
    if !(loss_db_per_cm >= 0.0 && length_cm >= 0.0) || !(loss_db_per_cm * length_cm).is_finite() {
        return Err(Error::domain("propagation loss and length must be finite and non-negative"));
    }
    Ok(Efficiency(db_to_linear(-loss_db_per_cm * length_cm)))
}

impl LinkElement {
    pub fn efficiency(name: impl Into<String>, eta: f64) -> Self {
        Self {
            name: name.into(),
            loss: ElementLoss::Efficiency(eta),
            uncertainty: None,
        }
    }

    pub fn loss_db(name: impl Into<String>, db: f64) -> Self {
        Self {
            name: name.into(),
            loss: ElementLoss::LossDb(db),
            uncertainty: None,
        }
    }

    pub fn propagation(name: impl Into<String>, loss_db_per_cm: f64, length_cm: f64) -> Self {
        Self {
            name: name.into(),
            loss: ElementLoss::Propagation {
                loss_db_per_cm,
                length_cm,
            },
            uncertainty: None,
        }
    }

    pub fn with_uncertainty(mut self, u: Uncertainty) -> Self {
        self.uncertainty = Some(u);
        self
    }

    /// Resolved linear efficiency in [0, 1].
    pub fn resolved_efficiency(&self) -> Result<f64> {
        let eta = match self.loss {
            ElementLoss::Efficiency(e) => e,
            ElementLoss::LossDb(db) => {
                if !(db >= 0.0) || !db.is_finite() {
                    return Err(Error::domain(format!("element '{}': loss_db must be finite and >= 0", self.name)));
                }
                db_to_linear(-db)
            }
            ElementLoss::Propagation {
                loss_db_per_cm,
                length_cm,
            } => propagation_efficiency(loss_db_per_cm, length_cm)?.0,
        };
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("element '{}': efficiency {eta} outside [0, 1]", self.name)));
        }
        Ok(eta)
    }

    /// Transmission in dB; `None` for a fully opaque element.
    pub fn transmission_db(&self) -> Result<Option<f64>> {
        let eta = self.resolved_efficiency()?;
        Ok(if eta > 0.0 { Some(linear_to_db(eta)?) } else { None })
    }

    /// One-sigma uncertainty expressed in dB (first order).
    pub fn sigma_db(&self) -> Result<Option<f64>> {
        let eta = self.resolved_efficiency()?;
        Ok(match self.uncertainty {
            None => None,
            Some(Uncertainty::Db(s)) => Some(s.abs()),
            Some(Uncertainty::Linear(s)) if eta > 0.0 => Some(10.0 / std::f64::consts::LN_10 * s.abs() / eta),
            Some(Uncertainty::Linear(_)) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkChain {
    pub elements: Vec<LinkElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub name: String,
    pub efficiency: f64,
    /// `None` encodes −∞ dB.
    pub db: Option<f64>,
    pub sigma_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub measured_efficiency: f64,
    pub measured_db: f64,
    /// Measured minus modeled, in dB. Negative means unexplained extra loss.
    pub residual_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub rows: Vec<BudgetRow>,
    pub total_efficiency: f64,
    pub total_db: Option<f64>,
    pub total_sigma_db: Option<f64>,
    /// Linear one-sigma on the total efficiency.
    pub total_sigma_linear: Option<f64>,
    pub residual: Option<ResidualRow>,
    pub flags: Vec<String>,
}

impl LinkChain {
    pub fn new(elements: Vec<LinkElement>) -> Self {
        Self { elements }
    }

    pub fn push(&mut self, el: LinkElement) {
        self.elements.push(el);
    }

    pub fn concat(mut self, other: LinkChain) -> Self {
        self.elements.extend(other.elements);
        self
    }

    pub fn total_efficiency(&self) -> Result<f64> {
        self.elements
            .iter()
            .try_fold(1.0, |acc, e| Ok(acc * e.resolved_efficiency()?))
    }

    /// Sum of element dB values; `None` if any element is opaque.
    pub fn total_db(&self) -> Result<Option<f64>> {
        let dbs = self
            .elements
            .iter()
            .map(|e| e.transmission_db())
            .collect::<Result<Vec<_>>>()?;
        if dbs.iter().any(Option::is_none) {
            return Ok(None);
        }
        Ok(Some(compensated_sum(dbs.into_iter().flatten())))
    }
}

/// Totals and per-element breakdown. With `measured` supplied, adds a row
/// for the loss the chain does not explain.
pub fn chain_efficiency(chain: &LinkChain, measured: Option<f64>) -> Result<BudgetReport> {
    if chain.elements.is_empty() {
        return Err(Error::domain("link chain is empty"));
    }
    let mut rows = Vec::with_capacity(chain.elements.len());
    let mut flags = Vec::new();
    let mut sigma_sq = 0.0;
    let mut any_sigma = false;
    for e in &chain.elements {
        let eff = e.resolved_efficiency()?;
        let db = e.transmission_db()?;
        if db.is_none() {
            flags.push(format!("element '{}' has zero efficiency (-inf dB)", e.name));
        }
        let s = e.sigma_db()?;
        if let Some(s) = s {
            any_sigma = true;
            sigma_sq += s * s;
        }
        rows.push(BudgetRow {
            name: e.name.clone(),
            efficiency: eff,
            db,
            sigma_db: s,
        });
    }
    let total_efficiency = chain.total_efficiency()?;
    let total_db = chain.total_db()?;
    let total_sigma_db = any_sigma.then(|| sigma_sq.sqrt());
    let total_sigma_linear = total_sigma_db.map(|s| total_efficiency * std::f64::consts::LN_10 / 10.0 * s);
    let residual = match measured {
        None => None,
        Some(m) => {
            let measured_db = linear_to_db(Efficiency::new(m)?.0)?;
            Some(ResidualRow {
                measured_efficiency: m,
                measured_db,
                residual_db: total_db.map(|t| measured_db - t),
            })
        }
    };
    Ok(BudgetReport {
        rows,
        total_efficiency,
        total_db,
        total_sigma_db,
        total_sigma_linear,
        residual,
        flags,
    })
}

fn fmt_db(db: Option<f64>) -> String {
    match db {
        Some(v) => format!("{v:>9.3}"),
        None => format!("{:>9}", "-inf"),
    }
}

impl BudgetReport {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(["unexplained".len(), "total".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>9}  {:>8}", "element", "efficiency", "dB", "sigma_dB");
        let sig = |s: Option<f64>| s.map(|v| format!("{v:>8.3}")).unwrap_or_else(|| format!("{:>8}", "-"));
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {:>10.4}  {}  {}", r.name, r.efficiency, fmt_db(r.db), sig(r.sigma_db));
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {}  {}",
            "total",
            self.total_efficiency,
            fmt_db(self.total_db),
            sig(self.total_sigma_db)
        );
        if let Some(res) = &self.residual {
            let _ = writeln!(out, "{:<width$}  {:>10.4}  {}  {:>8}", "measured", res.measured_efficiency, fmt_db(Some(res.measured_db)), "-");
            let _ = writeln!(out, "{:<width$}  {:>10}  {}  {:>8}", "unexplained", "", fmt_db(res.residual_db), "-");
        }
        for f in &self.flags {
            let _ = writeln!(out, "! {f}");
        }
        out
    }
}
