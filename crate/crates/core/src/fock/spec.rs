use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// State families understood by [`super::make_state`].
///
/// Serialized as `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum StateSpec {
    Fock {
        n: usize,
    },
    Coherent {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// e^{r(a² − a†²)/2}|0⟩.
    Squeezed {
        r: f64,
    },
    CatPlus {
        alpha: f64,
    },
    CatMinus {
        alpha: f64,
    },
    Thermal {
        nbar: f64,
    },
    /// Uniform phase average of |√n̄ e^{iθ}⟩⟨√n̄ e^{iθ}|.
    PhaseRandomized {
        nbar: f64,
    },
    /// Squeezed thermal state S(r) τ_n̄ S(r)†.
    SqueezedThermal {
        r: f64,
        nbar: f64,
    },
    /// Two-mode squeezed vacuum with Schmidt ratio λ, coefficients √(1−λ²)λⁿ.
    Tmsv {
        lambda: f64,
    },
    /// Explicit amplitudes; `dims` marks a bipartite vector.
    Amplitudes {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
        #[serde(default)]
        dims: Option<(usize, usize)>,
    },
}

impl StateSpec {
    /// Two-mode squeezing label r = 2 artanh λ for a TMSV.
    pub fn tmsv_squeezing(lambda: f64) -> f64 {
        2.0 * lambda.atanh()
    }

    pub fn tmsv_from_squeezing(r: f64) -> Self {
        StateSpec::Tmsv {
            lambda: (r / 2.0).tanh(),
        }
    }

    pub fn is_bipartite(&self) -> bool {
        matches!(
            self,
            StateSpec::Tmsv { .. } | StateSpec::Amplitudes { dims: Some(_), .. }
        )
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Fock { n } => write!(f, "fock:{n}"),
            StateSpec::Coherent { re, im } if *im == 0.0 => write!(f, "coherent:{re}"),
            StateSpec::Coherent { re, im } => write!(f, "coherent:{re},{im}"),
            StateSpec::Squeezed { r } => write!(f, "squeezed:{r}"),
            StateSpec::CatPlus { alpha } => write!(f, "cat+:{alpha}"),
            StateSpec::CatMinus { alpha } => write!(f, "cat-:{alpha}"),
            StateSpec::Thermal { nbar } => write!(f, "thermal:{nbar}"),
            StateSpec::PhaseRandomized { nbar } => write!(f, "prc:{nbar}"),
            StateSpec::SqueezedThermal { r, nbar } => write!(f, "sqthermal:r={r},nbar={nbar}"),
            StateSpec::Tmsv { lambda } => write!(f, "tmsv:lambda={lambda}"),
            StateSpec::Amplitudes { re, .. } => write!(f, "amplitudes[{}]", re.len()),
        }
    }
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("not a number: {s:?}")))
}

fn keyed<'a>(body: &'a str, key: &str) -> Option<&'a str> {
    body.split(',').find_map(|part| {
        let (k, v) = part.split_once('=')?;
        (k.trim() == key).then_some(v)
    })
}

/// Parses the compact CLI form, e.g. `fock:3`, `coherent:1.5,0.2`,
/// `tmsv:lambda=0.5`, `tmsv:r=1.0`, `amp:1,1,1,1`.
impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("state spec {s:?} lacks ':'")))?;
        let body = body.trim();
        let spec = match kind.trim().to_ascii_lowercase().as_str() {
            "fock" => StateSpec::Fock {
                n: body
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("fock index {body:?}")))?,
            },
            "coherent" => {
                let mut it = body.split(',');
                let re = num(it.next().unwrap_or(""))?;
                let im = it.next().map(num).transpose()?.unwrap_or(0.0);
                StateSpec::Coherent { re, im }
            }
            "squeezed" => StateSpec::Squeezed {
                r: num(keyed(body, "r").unwrap_or(body))?,
            },
            "cat+" | "cat_plus" | "catplus" => StateSpec::CatPlus { alpha: num(body)? },
            "cat-" | "cat_minus" | "catminus" => StateSpec::CatMinus { alpha: num(body)? },
            "thermal" => StateSpec::Thermal { nbar: num(body)? },
            "prc" | "phase_randomized" => StateSpec::PhaseRandomized { nbar: num(body)? },
            "sqthermal" | "squeezed_thermal" => StateSpec::SqueezedThermal {
                r: num(keyed(body, "r").ok_or_else(|| Error::InvalidParameter("r=".into()))?)?,
                nbar: num(keyed(body, "nbar").ok_or_else(|| Error::InvalidParameter("nbar=".into()))?)?,
            },
            "tmsv" => {
                if let Some(l) = keyed(body, "lambda") {
                    StateSpec::Tmsv { lambda: num(l)? }
                } else if let Some(r) = keyed(body, "r") {
                    StateSpec::tmsv_from_squeezing(num(r)?)
                } else {
                    StateSpec::Tmsv { lambda: num(body)? }
                }
            }
            "amp" | "amplitudes" => StateSpec::Amplitudes {
                re: body.split(',').map(num).collect::<Result<_>>()?,
                im: Vec::new(),
                dims: None,
            },
            other => return Err(Error::InvalidParameter(format!("unknown state kind {other:?}"))),
        };
        Ok(spec)
    }
}

/// A state family together with its truncation; serialized as
/// `{"kind": ..., "params": {...}, "dim": N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRequest {
    #[serde(flatten)]
    pub spec: StateSpec,
    pub dim: usize,
}

impl StateRequest {
    pub fn new(spec: StateSpec, dim: usize) -> Self {
        Self { spec, dim }
    }
}
