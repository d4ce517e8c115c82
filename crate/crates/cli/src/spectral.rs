//! Constants reported by `metabayes spectral`.

use serde::{Deserialize, Serialize};

use metabayes::dynamics::{cutoff_family_with_side, CutoffSide, DriftFamily, DEFAULT_CUT_POINT};
use metabayes::experiments::FamilySpec;
use metabayes::measure::{ergodic_measure, fisher_info, MeasureConfig};
use metabayes::spectral::{
    bakry_emery_gamma, eyring_kramers_band, eyring_kramers_gamma, locate_critical_points,
};
use metabayes::{Error, Result};

/// Accepts any file with a `[family]` table, experiment configs included.
#[derive(Debug, Deserialize)]
pub struct SpectralFile {
    pub family: FamilySpec,
    #[serde(default)]
    pub measure: MeasureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub family: String,
    pub sigma: f64,
    pub s1: f64,
    pub non_identifiable: bool,
    pub metastability: String,
    pub gamma: Option<f64>,
    pub gamma_band: Option<(f64, f64)>,
    pub lambda_exit: Option<f64>,
    pub cutoff: Option<String>,
    pub gamma_hat: Option<f64>,
    pub s1_hat: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn spectral_report(file: &SpectralFile) -> Result<SpectralReport> {
    let spec = &file.family;
    let theta0 = &spec.theta0;
    let full = spec.full()?;
    let measure = ergodic_measure(&full, theta0, None, &file.measure)?;
    let fisher = fisher_info(&full, theta0, &measure)?;
    let mut warnings = measure.warnings().to_vec();
    let (lo, hi) = (measure.support().lower[0], measure.support().upper[0]);

    let wells = locate_critical_points(&full, theta0, lo, hi);
    let (metastability, gamma) = match wells {
        Ok(w) => match eyring_kramers_gamma(&w, full.sigma()) {
            Ok(g) => (
                format!(
                    "two wells at x = {:.6} and {:.6}, saddle at {:.6}",
                    w.minima[0].x, w.minima[1].x, w.saddles[0].x
                ),
                Some(g),
            ),
            Err(_) => ("none".to_string(), None),
        },
        Err(Error::NonMorse { x, .. }) => (format!("none (degenerate critical point at x = {x:.6})"), None),
        Err(e) => return Err(e),
    };

    let cut = match (spec.cutoff, gamma) {
        (Some(c), _) => Some((c.point, c.side)),
        (None, Some(_)) => Some((DEFAULT_CUT_POINT, CutoffSide::Below)),
        (None, None) => None,
    };
    let (cutoff, gamma_hat, s1_hat) = match cut {
        Some((point, side)) => {
            let c = cutoff_family_with_side(&full, point, side, theta0)?;
            let m = ergodic_measure(&c, theta0, None, &file.measure)?;
            warnings.extend(m.warnings().iter().cloned());
            let s = m.support();
            let g = bakry_emery_gamma(&c, theta0, &s.lower, &s.upper).ok();
            (Some(c.label()), g, Some(fisher_info(&c, theta0, &m)?.s1()))
        }
        None => (None, bakry_emery_gamma(&full, theta0, &[lo], &[hi]).ok(), None),
    };
    Ok(SpectralReport {
        family: full.label(),
        sigma: full.sigma(),
        s1: fisher.s1(),
        non_identifiable: fisher.non_identifiable,
        metastability,
        gamma,
        gamma_band: gamma.map(|g| eyring_kramers_band(g, full.sigma())),
        lambda_exit: gamma,
        cutoff,
        gamma_hat,
        s1_hat,
        warnings,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.11e}")).unwrap_or_else(|| "none".into())
}

impl SpectralReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("family          {}\nsigma           {}\n", self.family, self.sigma);
        s += &format!(
            "s1              {:.11e}{}\n",
            self.s1,
            if self.non_identifiable { "  (non-identifiable)" } else { "" }
        );
        s += &format!("metastability   {}\n", self.metastability);
        s += &format!("gamma           {}\n", opt(self.gamma));
        if let Some((a, b)) = self.gamma_band {
            s += &format!("gamma band      [{a:.4e}, {b:.4e}]\n");
        }
        s += &format!("lambda          {}\n", opt(self.lambda_exit));
        if let Some(c) = &self.cutoff {
            s += &format!("cutoff          {c}\n");
        }
        s += &format!("gamma_hat       {}\n", opt(self.gamma_hat));
        s += &format!("s1_hat          {}\n", opt(self.s1_hat));
        for w in &self.warnings {
            s += &format!("warning: {w}\n");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.11e}")).unwrap_or_default();
        let mut s = String::from("quantity,value\n");
        s += &format!("sigma,{:.11e}\n", self.sigma);
        s += &format!("s1,{:.11e}\n", self.s1);
        s += &format!("non_identifiable,{}\n", u8::from(self.non_identifiable));
        s += &format!("gamma,{}\n", f(self.gamma));
        s += &format!("gamma_lower,{}\n", f(self.gamma_band.map(|b| b.0)));
        s += &format!("gamma_upper,{}\n", f(self.gamma_band.map(|b| b.1)));
        s += &format!("lambda,{}\n", f(self.lambda_exit));
        s += &format!("gamma_hat,{}\n", f(self.gamma_hat));
        s += &format!("s1_hat,{}\n", f(self.s1_hat));
        s
    }
}
