//! JSON descriptions of spaces and maps.

use serde::{Deserialize, Serialize};

use super::{NormSpec, NormedSpace};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rational::{parse_rat, rat_from_f64, rat_string, rat_to_f64, Rat};

/// A scalar as it appears in JSON: an integer, a float, or a string such as `"3/7"` or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Num {
    pub fn to_rat(&self) -> Result<Rat> {
        match self {
            Num::Int(i) => Ok(Rat::from_integer((*i).into())),
            Num::Float(f) => rat_from_f64(*f),
            Num::Str(s) => parse_rat(s),
        }
    }

    /// Float value; accepts `"inf"` for exponents.
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            Num::Int(i) => Ok(*i as f64),
            Num::Float(f) => Ok(*f),
            Num::Str(s) if matches!(s.trim(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Num::Str(s) => parse_rat(s).map(|r| rat_to_f64(&r)),
        }
    }

    fn exponent(p: f64) -> Num {
        if p.is_infinite() {
            Num::Str("inf".into())
        } else if p.fract() == 0.0 {
            Num::Int(p as i64)
        } else {
            Num::Float(p)
        }
    }

    fn from_rat(r: &Rat) -> Num {
        if r.is_integer() {
            if let Ok(i) = r.to_integer().try_into() {
                return Num::Int(i);
            }
        }
        Num::Str(rat_string(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDesc {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<Num>>,
}

impl MapDesc {
    /// Exact when no entry is written as a float.
    pub fn to_matrix(&self) -> Result<Matrix> {
        if self.entries.len() != self.rows {
            return Err(Error::parse(
                "entries",
                format!("expected {} rows, found {}", self.rows, self.entries.len()),
            ));
        }
        for (i, r) in self.entries.iter().enumerate() {
            if r.len() != self.cols {
                return Err(Error::parse(
                    format!("entries[{i}]"),
                    format!("expected {} columns, found {}", self.cols, r.len()),
                ));
            }
        }
        let any_float = self
            .entries
            .iter()
            .flatten()
            .any(|n| matches!(n, Num::Float(_)));
        if any_float {
            let data = self
                .entries
                .iter()
                .flatten()
                .map(Num::to_f64)
                .collect::<Result<Vec<_>>>()?;
            Matrix::from_f64(self.rows, self.cols, data)
        } else {
            let data = self
                .entries
                .iter()
                .flatten()
                .map(Num::to_rat)
                .collect::<Result<Vec<_>>>()?;
            Matrix::from_rat(self.rows, self.cols, data)
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        let entries = if m.is_exact() {
            m.exact_rows()
                .iter()
                .map(|r| r.iter().map(Num::from_rat).collect())
                .collect()
        } else {
            (0..m.rows())
                .map(|i| m.row(i).iter().map(|&v| Num::Float(v)).collect())
                .collect()
        };
        MapDesc {
            rows: m.rows(),
            cols: m.cols(),
            entries,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error(&e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceDesc {
    Lp {
        p: Num,
        dim: usize,
    },
    Lplq {
        p: Num,
        q: Num,
        n: usize,
        k: usize,
    },
    Vertices {
        dim: usize,
        vertices: Vec<Vec<Num>>,
    },
    Facets {
        dim: usize,
        #[serde(alias = "facets")]
        functionals: Vec<Vec<Num>>,
    },
    Psum {
        p: Num,
        left: Box<SpaceDesc>,
        right: Box<SpaceDesc>,
    },
    Pullback {
        host: Box<SpaceDesc>,
        map: MapDesc,
    },
    Quotient {
        host: Box<SpaceDesc>,
        kernel: Vec<Vec<Num>>,
    },
}

fn rat_rows(rows: &[Vec<Num>], field: &str) -> Result<Vec<Vec<Rat>>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .map(Num::to_rat)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::parse(format!("{field}[{i}]"), e.to_string()))
        })
        .collect()
}

fn json_error(e: &serde_json::Error) -> Error {
    // tagged enums are buffered before decoding, so semantic errors carry no position
    let location = if e.line() == 0 {
        "document".to_string()
    } else {
        format!("line {} column {}", e.line(), e.column())
    };
    Error::parse(location, e.to_string())
}

impl SpaceDesc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error(&e))
    }

    pub fn build(&self) -> Result<NormedSpace> {
        match self {
            SpaceDesc::Lp { p, dim } => NormedSpace::lp(p.to_f64()?, *dim),
            SpaceDesc::Lplq { p, q, n, k } => NormedSpace::lplq(p.to_f64()?, q.to_f64()?, *n, *k),
            SpaceDesc::Vertices { dim, vertices } => {
                NormedSpace::vertex_ball(*dim, &rat_rows(vertices, "vertices")?)
            }
            SpaceDesc::Facets { dim, functionals } => {
                NormedSpace::facet_ball(*dim, &rat_rows(functionals, "functionals")?)
            }
            SpaceDesc::Psum { p, left, right } => {
                NormedSpace::p_sum(&left.build()?, &right.build()?, p.to_f64()?)
            }
            SpaceDesc::Pullback { host, map } => {
                NormedSpace::pullback(&host.build()?, map.to_matrix()?)
            }
            SpaceDesc::Quotient { host, kernel } => {
                NormedSpace::quotient(&host.build()?, &rat_rows(kernel, "kernel")?)
            }
        }
    }

    /// Canonical description of a space (quotients are described by their kernel basis).
    pub fn describe(space: &NormedSpace) -> SpaceDesc {
        let rows = |vs: &[Vec<Rat>]| -> Vec<Vec<Num>> {
            vs.iter()
                .map(|v| v.iter().map(Num::from_rat).collect())
                .collect()
        };
        match space.spec() {
            NormSpec::Lp { p } => SpaceDesc::Lp {
                p: Num::exponent(*p),
                dim: space.dim(),
            },
            NormSpec::LpLq { p, q, n, k } => SpaceDesc::Lplq {
                p: Num::exponent(*p),
                q: Num::exponent(*q),
                n: *n,
                k: *k,
            },
            NormSpec::VertexBall { vertices, .. } => SpaceDesc::Vertices {
                dim: space.dim(),
                vertices: rows(vertices),
            },
            NormSpec::FacetBall { functionals, .. } => SpaceDesc::Facets {
                dim: space.dim(),
                functionals: rows(functionals),
            },
            NormSpec::PSum { p, left, right } => SpaceDesc::Psum {
                p: Num::exponent(*p),
                left: Box::new(Self::describe(left)),
                right: Box::new(Self::describe(right)),
            },
            NormSpec::Pullback { host, map } => SpaceDesc::Pullback {
                host: Box::new(Self::describe(host)),
                map: MapDesc::from_matrix(map),
            },
            NormSpec::Quotient { host, kernel, .. } => SpaceDesc::Quotient {
                host: Box::new(Self::describe(host)),
                kernel: rows(
                    &(0..kernel.cols())
                        .map(|j| kernel.exact_col(j))
                        .collect::<Vec<_>>(),
                ),
            },
        }
    }
}

impl NormedSpace {
    pub fn from_json(text: &str) -> Result<Self> {
        SpaceDesc::parse(text)?.build()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SpaceDesc::describe(self)).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        let e = NormedSpace::from_json(r#"{"kind":"lp","p":2,"dim":3}"#).unwrap();
        assert_eq!(e.dim(), 3);
        let m = NormedSpace::from_json(r#"{"kind":"lplq","p":1,"q":4,"n":2,"k":3}"#).unwrap();
        assert_eq!(m.dim(), 6);
        let v = NormedSpace::from_json(r#"{"kind":"vertices","dim":2,"vertices":[[1,0],[0,"1/2"]]}"#)
            .unwrap();
        assert_eq!(v.norm(&[0.0, 1.0]), 2.0);
        let inf = NormedSpace::from_json(r#"{"kind":"lp","p":"inf","dim":2}"#).unwrap();
        assert_eq!(inf.norm(&[1.0, -3.0]), 3.0);
        let s = NormedSpace::from_json(
            r#"{"kind":"psum","p":1,"left":{"kind":"lp","p":1,"dim":1},"right":{"kind":"facets","dim":1,"functionals":[[2]]}}"#,
        )
        .unwrap();
        assert_eq!(s.norm(&[1.0, 1.0]), 3.0);
    }

    #[test]
    fn round_trip_description() {
        let q = NormedSpace::quotient(
            &NormedSpace::lp(1.0, 3).unwrap(),
            &[vec![Rat::from_integer(1.into()), Rat::from_integer((-1).into()), Rat::from_integer(0.into())]],
        )
        .unwrap();
        let text = q.to_json().to_string();
        let back = NormedSpace::from_json(&text).unwrap();
        for x in [[1.0, 0.5], [-0.25, 2.0]] {
            assert!((q.norm(&x) - back.norm(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_input_reports_location() {
        match NormedSpace::from_json("{\"kind\":\"lp\",\n \"p\":2,}") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
            other => panic!("{other:?}"),
        }
        match NormedSpace::from_json(r#"{"kind":"lp","p":2}"#) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("dim"), "{message}"),
            other => panic!("{other:?}"),
        }
        let m = MapDesc::parse(r#"{"rows":2,"cols":1,"entries":[[1]]}"#).unwrap();
        assert!(matches!(m.to_matrix(), Err(Error::Parse { .. })));
    }
}
