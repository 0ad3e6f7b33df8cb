use super::{BoundingBox, ConvexBody, HalfSpace, PolytopeOptions};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// JSON description of a domain, e.g. `{"kind":"ball","center":[0,0],"radius":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Interval {
        lo: f64,
        hi: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Polytope {
        halfspaces: Vec<HalfSpaceSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diameter: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounding_box: Option<BoxSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceSpec {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalBody {
    lo: f64,
    hi: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BallBody {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolytopeBody {
    halfspaces: Vec<HalfSpaceSpec>,
    #[serde(default)]
    diameter: Option<f64>,
    #[serde(default)]
    bounding_box: Option<BoxSpec>,
}

fn field_err(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::DomainSpec {
        path: path.into(),
        reason: reason.into(),
    }
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut value: serde_json::Value = serde_path_to_error::deserialize(de)
            .map_err(|e| field_err(e.path().to_string(), e.into_inner().to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| field_err(".", "expected a JSON object"))?;
        let kind = match obj.remove("kind") {
            Some(serde_json::Value::String(k)) => k,
            Some(_) => return Err(field_err("kind", "must be a string")),
            None => return Err(field_err("kind", "missing field")),
        };
        // The tagged-enum path loses field positions, so each kind is
        // deserialized from its own body.
        fn body<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T> {
            serde_path_to_error::deserialize(v)
                .map_err(|e| field_err(e.path().to_string(), e.into_inner().to_string()))
        }
        match kind.as_str() {
            "interval" => {
                let b: IntervalBody = body(value)?;
                Ok(DomainSpec::Interval { lo: b.lo, hi: b.hi })
            }
            "box" => {
                let b: BoxSpec = body(value)?;
                Ok(DomainSpec::Box { lo: b.lo, hi: b.hi })
            }
            "ball" => {
                let b: BallBody = body(value)?;
                Ok(DomainSpec::Ball {
                    center: b.center,
                    radius: b.radius,
                })
            }
            "polytope" => {
                let b: PolytopeBody = body(value)?;
                Ok(DomainSpec::Polytope {
                    halfspaces: b.halfspaces,
                    diameter: b.diameter,
                    bounding_box: b.bounding_box,
                })
            }
            other => Err(field_err(
                "kind",
                format!("unknown kind `{other}`, expected interval, box, ball or polytope"),
            )),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain spec serializes")
    }

    /// Validates field by field (so errors name the offending path) and
    /// builds the body.
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            DomainSpec::Interval { lo, hi } => {
                if !(lo < hi) {
                    return Err(field_err("hi", format!("must exceed lo ({lo})")));
                }
                ConvexBody::interval(*lo, *hi)
            }
            DomainSpec::Box { lo, hi } => {
                if lo.is_empty() {
                    return Err(field_err("lo", "must be nonempty"));
                }
                if lo.len() != hi.len() {
                    return Err(field_err(
                        "hi",
                        format!("length {} differs from lo length {}", hi.len(), lo.len()),
                    ));
                }
                if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i])) {
                    return Err(field_err(
                        format!("hi[{i}]"),
                        format!("must exceed lo[{i}] = {}", lo[i]),
                    ));
                }
                ConvexBody::new_box(lo.clone(), hi.clone())
            }
            DomainSpec::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(field_err("center", "must be nonempty"));
                }
                if !(*radius > 0.0) {
                    return Err(field_err("radius", format!("must be positive (got {radius})")));
                }
                ConvexBody::ball(center.clone(), *radius)
            }
            DomainSpec::Polytope {
                halfspaces,
                diameter,
                bounding_box,
            } => {
                let dim = halfspaces
                    .first()
                    .map(|h| h.a.len())
                    .ok_or_else(|| field_err("halfspaces", "must be nonempty"))?;
                for (i, h) in halfspaces.iter().enumerate() {
                    if h.a.len() != dim {
                        return Err(field_err(
                            format!("halfspaces[{i}].a"),
                            format!("length {} differs from dimension {dim}", h.a.len()),
                        ));
                    }
                    if h.a.iter().all(|v| *v == 0.0) {
                        return Err(field_err(format!("halfspaces[{i}].a"), "zero normal"));
                    }
                }
                if let Some(d) = diameter {
                    if !(*d > 0.0) {
                        return Err(field_err("diameter", "must be positive"));
                    }
                }
                if let Some(bb) = bounding_box {
                    if bb.lo.len() != dim || bb.hi.len() != dim {
                        return Err(field_err("bounding_box", format!("must have dimension {dim}")));
                    }
                    if let Some(i) = (0..dim).find(|&i| !(bb.lo[i] < bb.hi[i])) {
                        return Err(field_err(
                            format!("bounding_box.hi[{i}]"),
                            "must exceed bounding_box.lo",
                        ));
                    }
                }
                ConvexBody::polytope(
                    halfspaces
                        .iter()
                        .map(|h| HalfSpace::new(h.a.clone(), h.b))
                        .collect(),
                    PolytopeOptions {
                        diameter: *diameter,
                        bounding_box: bounding_box.as_ref().map(|bb| BoundingBox {
                            lo: bb.lo.clone(),
                            hi: bb.hi.clone(),
                        }),
                        ..Default::default()
                    },
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BodyKind;

    #[test]
    fn parses_each_kind() {
        let b = ConvexBody::from_json(r#"{"kind":"box","lo":[0,0],"hi":[1,2]}"#).unwrap();
        assert_eq!(b.kind(), BodyKind::Box);
        let b = ConvexBody::from_json(r#"{"kind":"ball","center":[0,0,0],"radius":0.5}"#).unwrap();
        assert_eq!(b.diameter(), 1.0);
        let b = ConvexBody::from_json(r#"{"kind":"interval","lo":-1,"hi":1}"#).unwrap();
        assert_eq!(b.diameter(), 2.0);
        let b = ConvexBody::from_json(
            r#"{"kind":"polytope","halfspaces":[{"a":[-1,0],"b":0},{"a":[0,-1],"b":0},{"a":[1,1],"b":1}]}"#,
        )
        .unwrap();
        assert_eq!(b.kind(), BodyKind::Polytope);
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = DomainSpec::from_json(r#"{"kind":"polytope","halfspaces":[{"a":[1,0],"b":"x"}]}"#)
            .unwrap_err();
        match err {
            Error::DomainSpec { path, .. } => assert_eq!(path, "halfspaces[0].b"),
            other => panic!("unexpected {other:?}"),
        }
        let err = ConvexBody::from_json(r#"{"kind":"box","lo":[0,0],"hi":[1,0]}"#).unwrap_err();
        match err {
            Error::DomainSpec { path, .. } => assert_eq!(path, "hi[1]"),
            other => panic!("unexpected {other:?}"),
        }
        let err = ConvexBody::from_json(r#"{"kind":"ball","center":[0],"radius":-1}"#).unwrap_err();
        assert!(matches!(err, Error::DomainSpec { ref path, .. } if path == "radius"));
        let err = DomainSpec::from_json(r#"{"kind":"cone"}"#).unwrap_err();
        assert!(matches!(err, Error::DomainSpec { ref path, .. } if path == "kind"));
    }

    #[test]
    fn spec_echo_round_trips() {
        let text = r#"{"kind":"ball","center":[0.0,1.0],"radius":0.5}"#;
        let body = ConvexBody::from_json(text).unwrap();
        assert_eq!(body.to_spec(), DomainSpec::from_json(text).unwrap());
    }
}
