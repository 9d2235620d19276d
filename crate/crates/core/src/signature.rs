//! Function signatures as seen by the driver generator: every parameter is
//! classified by how its bytes are supplied and compared.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ctype::{CType, NodeKind, PrimKind, TypeId, TypeTable};
use crate::parser::Unit;

/// Array parameters without a bound get this many elements.
pub const DEFAULT_ARRAY_LEN: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    /// Filled from input and compared after the call.
    #[default]
    InOut,
    /// Filled from input, not compared.
    In,
    /// Zero-initialized, compared after the call.
    Out,
}

impl Direction {
    pub fn is_input(self) -> bool {
        self != Direction::Out
    }

    pub fn is_output(self) -> bool {
        self != Direction::In
    }
}

/// User overrides for one parameter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ParamAnnotation {
    /// Element count for pointer and array parameters.
    pub length: Option<u64>,
    /// Pointee type name for `void *` parameters.
    pub pointee: Option<String>,
    pub opaque: bool,
    pub direction: Option<Direction>,
    /// The last element of the buffer is forced to zero before the calls.
    pub nul_terminated: bool,
    /// The buffer holds an ISO 8601 timestamp string.
    pub timestamp: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FunctionAnnotations {
    pub params: BTreeMap<String, ParamAnnotation>,
    /// Element count compared behind a returned pointer.
    pub return_length: Option<u64>,
    /// C statements spliced between the two calls to reset global state.
    pub reset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Passed by value.
    Value,
    /// Passed as a pointer to `count` elements of `elem`.
    Buffer { elem: TypeId, count: u64 },
    /// Passed as a zero value; neither filled nor compared.
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeId,
    pub kind: ParamKind,
    pub direction: Direction,
    pub nul_terminated: bool,
    pub timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    Void,
    Value,
    /// Compared by NULL-ness and then `count` pointee elements.
    Pointer { elem: TypeId, count: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSignature {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: TypeId,
    pub ret_kind: ReturnKind,
    pub reset: Option<String>,
    /// Non-fatal observations, e.g. pointers inside compared structs.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("no function named `{0}`")]
    NotFound(String),
    #[error("parameter `{param}` is unsupported: {reason}")]
    UnsupportedParam { param: String, reason: String },
    #[error("function `{0}` is variadic")]
    Variadic(String),
    #[error("annotation for `{param}`: {reason}")]
    BadAnnotation { param: String, reason: String },
}

/// Builds the signature of `function_name` with annotation overlays applied.
pub fn signature_of(
    unit: &mut Unit,
    function_name: &str,
    annotations: Option<&FunctionAnnotations>,
) -> Result<FunctionSignature, SignatureError> {
    let empty = FunctionAnnotations::default();
    let ann = annotations.unwrap_or(&empty);
    let decl = unit.function(function_name).ok_or_else(|| SignatureError::NotFound(function_name.to_string()))?;
    let CType::Function { ret, params, variadic } = unit.types.get(decl.ty).clone() else {
        return Err(SignatureError::NotFound(function_name.to_string()));
    };
    if variadic {
        return Err(SignatureError::Variadic(function_name.to_string()));
    }
    let names: Vec<String> = (0..params.len())
        .map(|i| decl.param_names.get(i).cloned().flatten().unwrap_or_else(|| format!("arg{i}")))
        .collect();
    for key in ann.params.keys() {
        if !names.contains(key) {
            return Err(SignatureError::BadAnnotation {
                param: key.clone(),
                reason: "no parameter with this name".to_string(),
            });
        }
    }

    let mut out = Vec::with_capacity(params.len());
    let mut warnings = Vec::new();
    for (ty, name) in params.into_iter().zip(names) {
        let a = ann.params.get(&name).cloned().unwrap_or_default();
        let unsupported = |reason: &str| SignatureError::UnsupportedParam { param: name.clone(), reason: reason.to_string() };
        let kind = if a.opaque {
            ParamKind::Opaque
        } else {
            classify_param(unit, ty, &a).map_err(|r| unsupported(&r))?
        };
        match kind {
            ParamKind::Value => check_value_type(&unit.types, ty).map_err(|r| unsupported(&r))?,
            ParamKind::Buffer { elem, .. } => check_value_type(&unit.types, elem).map_err(|r| unsupported(&r))?,
            ParamKind::Opaque => {}
        }
        if let ParamKind::Value | ParamKind::Buffer { .. } = kind {
            let inner = match kind {
                ParamKind::Buffer { elem, .. } => elem,
                _ => ty,
            };
            if contains_pointer(&unit.types, inner) {
                warnings.push(format!(
                    "parameter `{name}` contains pointer members; they are filled and compared as raw bytes"
                ));
            }
        }
        if (a.nul_terminated || a.timestamp) && !matches!(kind, ParamKind::Buffer { .. }) {
            return Err(SignatureError::BadAnnotation {
                param: name,
                reason: "string flags need a pointer or array parameter".to_string(),
            });
        }
        out.push(Param {
            name,
            ty,
            kind,
            direction: a.direction.unwrap_or_default(),
            nul_terminated: a.nul_terminated || a.timestamp,
            timestamp: a.timestamp,
        });
    }

    let ret_kind = match unit.types.node_kind(ret) {
        NodeKind::Primitive if unit.types.primitive(ret) == Some(PrimKind::Void) => ReturnKind::Void,
        NodeKind::Pointer => {
            let CType::Pointer { pointee } = unit.types.get(unit.types.resolve(ret)) else { unreachable!() };
            let pointee = *pointee;
            if check_value_type(&unit.types, pointee).is_err() {
                // Unknown pointee (e.g. void *): only NULL-ness is compared.
                ReturnKind::Pointer { elem: pointee, count: 0 }
            } else {
                ReturnKind::Pointer { elem: pointee, count: ann.return_length.unwrap_or(1) }
            }
        }
        _ => {
            check_value_type(&unit.types, ret).map_err(|r| SignatureError::UnsupportedParam {
                param: "return value".to_string(),
                reason: r,
            })?;
            ReturnKind::Value
        }
    };

    Ok(FunctionSignature {
        name: function_name.to_string(),
        params: out,
        ret,
        ret_kind,
        reset: ann.reset.clone(),
        warnings,
    })
}

fn classify_param(unit: &mut Unit, ty: TypeId, a: &ParamAnnotation) -> Result<ParamKind, String> {
    let resolved = unit.types.resolve(ty);
    match unit.types.get(resolved).clone() {
        CType::Array { elem, len } => {
            let count = a.length.or(len).unwrap_or(DEFAULT_ARRAY_LEN);
            Ok(ParamKind::Buffer { elem, count: nonzero(count)? })
        }
        CType::Pointer { pointee } => {
            let mut elem = pointee;
            if let Some(name) = &a.pointee {
                elem = unit.parse_type_name(name).map_err(|e| format!("bad pointee type `{name}`: {e}"))?;
            }
            match unit.types.node_kind(elem) {
                NodeKind::Pointer => return Err("pointer to pointer (annotate as opaque)".to_string()),
                NodeKind::Function => return Err("function pointer (annotate as opaque)".to_string()),
                NodeKind::Primitive if unit.types.primitive(elem) == Some(PrimKind::Void) => {
                    return Err("void pointer needs a `pointee` annotation".to_string())
                }
                _ => {}
            }
            Ok(ParamKind::Buffer { elem, count: nonzero(a.length.unwrap_or(1))? })
        }
        _ => {
            if a.length.is_some() || a.pointee.is_some() {
                return Err("length/pointee annotations apply to pointers and arrays only".to_string());
            }
            Ok(ParamKind::Value)
        }
    }
}

fn nonzero(n: u64) -> Result<u64, String> {
    if n == 0 {
        Err("element count must be positive".to_string())
    } else {
        Ok(n)
    }
}

/// A type that can be declared as a variable and copied byte-wise.
fn check_value_type(types: &TypeTable, ty: TypeId) -> Result<(), String> {
    match types.get(types.resolve(ty)) {
        CType::Primitive(PrimKind::Void) => Err("void value".to_string()),
        CType::Opaque { name } => Err(format!("type `{name}` could not be parsed")),
        CType::Function { .. } => Err("function type".to_string()),
        CType::Record { complete: false, .. } | CType::Enum { complete: false, .. } => {
            Err(format!("incomplete type `{}`", types.display_name(ty)))
        }
        CType::Array { elem, len: Some(_) } => check_value_type(types, *elem),
        CType::Array { len: None, .. } => Err("array of unknown length".to_string()),
        _ => Ok(()),
    }
}

fn contains_pointer(types: &TypeTable, ty: TypeId) -> bool {
    match types.get(types.resolve(ty)) {
        CType::Pointer { .. } => true,
        CType::Array { elem, .. } => contains_pointer(types, *elem),
        CType::Record { fields, .. } => fields.iter().any(|f| contains_pointer(types, f.ty)),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn empty_parameter_list() {
        let mut u = Unit::parse("int f(void);").unwrap();
        let s = signature_of(&mut u, "f", None).unwrap();
        assert!(s.params.is_empty());
        assert_eq!(s.ret_kind, ReturnKind::Value);
        assert_eq!(u.types.primitive(s.ret), Some(PrimKind::Int));
    }

    #[test]
    fn unknown_function() {
        let mut u = Unit::parse("int f(void);").unwrap();
        assert_eq!(signature_of(&mut u, "g", None), Err(SignatureError::NotFound("g".to_string())));
    }

    #[test]
    fn arrays_default_to_one_hundred_elements() {
        let mut u = Unit::parse("void f(int a[], char b[8], double *c);").unwrap();
        let s = signature_of(&mut u, "f", None).unwrap();
        let counts: Vec<u64> = s
            .params
            .iter()
            .map(|p| match p.kind {
                ParamKind::Buffer { count, .. } => count,
                _ => 0,
            })
            .collect();
        assert_eq!(counts, vec![100, 8, 1]);
        assert_eq!(s.ret_kind, ReturnKind::Void);
    }

    #[test]
    fn annotations_overlay_defaults() {
        let mut u = Unit::parse("typedef struct { int x; } S; int f(void *p, char *s, int (*cb)(int), int n);").unwrap();
        assert!(matches!(signature_of(&mut u, "f", None), Err(SignatureError::UnsupportedParam { .. })));
        let mut ann = FunctionAnnotations::default();
        ann.params.insert("p".into(), ParamAnnotation { pointee: Some("S".into()), length: Some(2), ..Default::default() });
        ann.params.insert(
            "s".into(),
            ParamAnnotation { length: Some(16), nul_terminated: true, direction: Some(Direction::In), ..Default::default() },
        );
        ann.params.insert("cb".into(), ParamAnnotation { opaque: true, ..Default::default() });
        let s = signature_of(&mut u, "f", Some(&ann)).unwrap();
        let ParamKind::Buffer { elem, count } = s.params[0].kind else { panic!() };
        assert_eq!((u.types.display_name(elem).as_str(), count), ("S", 2));
        assert_eq!(s.params[1].direction, Direction::In);
        assert!(s.params[1].nul_terminated);
        assert_eq!(s.params[2].kind, ParamKind::Opaque);
        assert_eq!(s.params[3].kind, ParamKind::Value);

        ann.params.insert("zzz".into(), ParamAnnotation::default());
        assert!(matches!(signature_of(&mut u, "f", Some(&ann)), Err(SignatureError::BadAnnotation { .. })));
    }

    #[test]
    fn variadic_and_pointer_to_pointer_are_rejected() {
        let mut u = Unit::parse("int v(int, ...); int pp(char **argv);").unwrap();
        assert!(matches!(signature_of(&mut u, "v", None), Err(SignatureError::Variadic(_))));
        assert!(matches!(signature_of(&mut u, "pp", None), Err(SignatureError::UnsupportedParam { .. })));
    }

    #[test]
    fn interior_pointers_produce_warnings() {
        let mut u = Unit::parse("struct n { struct n *next; int v; }; int len(struct n *head);").unwrap();
        let s = signature_of(&mut u, "len", None).unwrap();
        assert_eq!(s.warnings.len(), 1);
    }
}
