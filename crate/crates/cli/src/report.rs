use std::fmt::Write as _;

use collat_core::{
    InfeasibilityWitness, InvestmentNetwork, Nec, Rational, Solution, ValidationReport,
};
use serde::Serialize;

pub const REPORT_SCHEMA: &str = "collat-report/1";

/// Exact value with a decimal hint for humans.
#[derive(Debug, Clone, Serialize)]
pub struct Exact {
    pub value: String,
    pub decimal: String,
}

impl From<&Rational> for Exact {
    fn from(r: &Rational) -> Self {
        Exact {
            value: r.to_string(),
            decimal: r.decimal_hint(),
        }
    }
}

impl Exact {
    fn text(&self) -> String {
        if self.value == self.decimal {
            self.value.clone()
        } else {
            format!("{} (~{})", self.value, self.decimal)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum NecValue {
    Finite(Exact),
    /// `"infinite"`: no viable matrix, or a positive total over free stars.
    Infinite(&'static str),
}

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRow {
    pub enterprise: String,
    pub investor: String,
    pub amount: Exact,
    pub collateral: Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct StarRow {
    pub enterprise: String,
    pub paid: Exact,
    pub optimum: Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub vertex: String,
    pub shortfall: Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Invalid,
    Solvable,
    Infeasible,
    Solved,
    Viable,
    NotViable,
}

impl Status {
    fn text(self) -> &'static str {
        match self {
            Status::Invalid => "invalid",
            Status::Solvable => "solvable",
            Status::Infeasible => "infeasible",
            Status::Solved => "solved",
            Status::Viable => "viable",
            Status::NotViable => "not-viable",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputInfo>,
    pub status: Status,
    pub method: Option<String>,
    pub total: Option<Exact>,
    pub collaterals: Vec<EdgeRow>,
    pub order: Vec<String>,
    pub stars: Vec<StarRow>,
    pub nec: Option<NecValue>,
    pub witness: Vec<WitnessRow>,
    pub violations: Vec<String>,
    pub stuck: Vec<String>,
    pub minimal: Option<bool>,
    pub reducible: Vec<String>,
    pub timing_us: u128,
}

impl Report {
    pub fn new(command: &'static str, inputs: Vec<InputInfo>, status: Status) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            command,
            inputs,
            status,
            method: None,
            total: None,
            collaterals: Vec::new(),
            order: Vec::new(),
            stars: Vec::new(),
            nec: None,
            witness: Vec::new(),
            violations: Vec::new(),
            stuck: Vec::new(),
            minimal: None,
            reducible: Vec::new(),
            timing_us: 0,
        }
    }

    pub fn with_validation(mut self, v: &ValidationReport) -> Self {
        self.violations = v.messages().to_vec();
        self
    }

    pub fn with_witness(mut self, w: &InfeasibilityWitness) -> Self {
        self.witness = w
            .ids
            .iter()
            .zip(&w.shortfalls)
            .map(|(id, s)| WitnessRow {
                vertex: id.clone(),
                shortfall: s.into(),
            })
            .collect();
        self.nec = Some(NecValue::Infinite("infinite"));
        self
    }

    pub fn with_matrix(mut self, net: &InvestmentNetwork, values: &[Rational]) -> Self {
        self.collaterals = net
            .edges()
            .iter()
            .zip(values)
            .map(|(e, c)| EdgeRow {
                enterprise: net.vertex(e.enterprise).id.clone(),
                investor: net.vertex(e.investor).id.clone(),
                amount: (&e.amount).into(),
                collateral: c.into(),
            })
            .collect();
        self.total = Some((&values.iter().sum::<Rational>()).into());
        self
    }

    pub fn with_solution(self, net: &InvestmentNetwork, sol: &Solution) -> Self {
        let mut r = self.with_matrix(net, sol.collaterals.values());
        r.method = Some(sol.method.to_string());
        r.order = sol.order.edges().iter().map(|&e| net.label(e)).collect();
        r.stars = sol
            .stars
            .iter()
            .map(|s| StarRow {
                enterprise: net.vertex(s.enterprise).id.clone(),
                paid: (&s.paid).into(),
                optimum: (&s.optimum).into(),
            })
            .collect();
        r.nec = Some(match &sol.nec {
            Nec::Ratio(v) => NecValue::Finite(v.into()),
            Nec::Unbounded => NecValue::Infinite("infinite"),
        });
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Same fields as the JSON form, one per line; empty fields are omitted.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        for input in &self.inputs {
            let _ = writeln!(s, "input: {} (sha256 {})", input.path, input.sha256);
        }
        let _ = writeln!(s, "status: {}", self.status.text());
        if let Some(m) = &self.method {
            let _ = writeln!(s, "method: {m}");
        }
        if let Some(t) = &self.total {
            let _ = writeln!(s, "total: {}", t.text());
        }
        if !self.collaterals.is_empty() {
            let _ = writeln!(s, "collaterals:");
            for row in &self.collaterals {
                let _ = writeln!(
                    s,
                    "  ({}, {}) amount {} collateral {}",
                    row.enterprise,
                    row.investor,
                    row.amount.text(),
                    row.collateral.text()
                );
            }
        }
        if !self.order.is_empty() {
            let _ = writeln!(s, "order: {}", self.order.join(" "));
        }
        if !self.stars.is_empty() {
            let _ = writeln!(s, "stars:");
            for row in &self.stars {
                let _ = writeln!(
                    s,
                    "  {} paid {} optimum {}",
                    row.enterprise,
                    row.paid.text(),
                    row.optimum.text()
                );
            }
        }
        match &self.nec {
            Some(NecValue::Finite(v)) => {
                let _ = writeln!(s, "nec: {}", v.text());
            }
            Some(NecValue::Infinite(_)) if self.status == Status::Infeasible => {
                let _ = writeln!(s, "nec: undefined (no viable matrix)");
            }
            Some(NecValue::Infinite(v)) => {
                let _ = writeln!(s, "nec: {v}");
            }
            None => {}
        }
        if !self.witness.is_empty() {
            let _ = writeln!(s, "witness (self-dependent subgraph):");
            for row in &self.witness {
                let _ = writeln!(s, "  {} short {}", row.vertex, row.shortfall.text());
            }
        }
        if !self.violations.is_empty() {
            let _ = writeln!(s, "violations:");
            for v in &self.violations {
                let _ = writeln!(s, "  {v}");
            }
        }
        if !self.stuck.is_empty() {
            let _ = writeln!(s, "stuck: {}", self.stuck.join(" "));
        }
        if let Some(m) = self.minimal {
            let _ = writeln!(s, "minimal: {m}");
        }
        if !self.reducible.is_empty() {
            let _ = writeln!(s, "reducible: {}", self.reducible.join(" "));
        }
        let _ = writeln!(s, "timing: {} us", self.timing_us);
        s
    }

    /// Per-edge rows; summary values go in the JSON and text forms.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "enterprise",
            "investor",
            "amount",
            "collateral",
            "collateral_decimal",
        ])?;
        for row in &self.collaterals {
            w.write_record([
                &row.enterprise,
                &row.investor,
                &row.amount.value,
                &row.collateral.value,
                &row.collateral.decimal,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }
}
