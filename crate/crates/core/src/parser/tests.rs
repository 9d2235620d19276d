use alloc::string::{String, ToString};
use alloc::vec;
use super::*;
use crate::ast::{ExprKind, StmtKind};
use crate::ctype::{NodeKind, PrimKind};

fn canon(unit: &Unit, name: &str) -> String {
    let id = unit.types.typedef(name).unwrap();
    unit.types.canonical(id)
}

#[test]
fn typedefs_and_records() {
    let u = Unit::parse(
        "typedef double real; struct p { int x, y; real *w; }; typedef struct p P;\n\
         typedef union { char c[3]; long l; } U;",
    )
    .unwrap();
    assert_eq!(canon(&u, "real"), "typedef real = double");
    let p = u.types.typedef("P").unwrap();
    let rec = u.types.resolve(p);
    assert_eq!(
        u.types.canonical(rec),
        "struct p{x: int; y: int; w: ptr(real)}"
    );
    let un = u.types.resolve(u.types.typedef("U").unwrap());
    assert_eq!(u.types.node_kind(un), NodeKind::Union);
    assert_eq!(u.types.canonical(un), "union <anon>{c: array[3](char); l: long}");
}

#[test]
fn declarators_with_function_pointers_and_arrays() {
    let u = Unit::parse("typedef int (*cb)(const char *, unsigned long); typedef char grid[2][3 + 1];").unwrap();
    assert_eq!(canon(&u, "cb"), "typedef cb = ptr(fn(ptr(char), unsigned long) -> int)");
    assert_eq!(canon(&u, "grid"), "typedef grid = array[2](array[4](char))");
}

#[test]
fn enum_constants_feed_array_bounds() {
    let u = Unit::parse("enum { A = 2, B, C = B * 2 }; typedef int arr[C];").unwrap();
    assert_eq!(u.types.enum_constant("B"), Some(3));
    assert_eq!(canon(&u, "arr"), "typedef arr = array[6](int)");
}

#[test]
fn function_definitions_are_recorded_with_spans() {
    let src = "static int add(int a, int b) { return a + b; }\nint neg(int);";
    let u = Unit::parse(src).unwrap();
    let add = u.function("add").unwrap();
    assert!(add.is_static);
    assert_eq!(add.param_names, vec![Some("a".to_string()), Some("b".to_string())]);
    let def = add.definition.as_ref().unwrap();
    assert_eq!(def.body_span.text(src), "{ return a + b; }");
    assert_eq!(def.name_span.text(src), "add");
    assert!(u.function("neg").unwrap().definition.is_none());
}

#[test]
fn body_parsing_tracks_spans_and_scopes() {
    let src = "typedef int T;\nint f(int n) { T x = n * 2; { int T = 3; x += T; } if (x > 4) return x; return -1; }";
    let u = Unit::parse(src).unwrap();
    let body = u.parse_body("f").unwrap();
    let StmtKind::Compound(items) = &body.kind else { panic!() };
    assert_eq!(items.len(), 4);
    assert!(matches!(items[0].kind, StmtKind::Decl(ref i) if i.len() == 1));
    let StmtKind::If { cond, .. } = &items[2].kind else { panic!("{:?}", items[2]) };
    assert_eq!(cond.span.text(src), "x > 4");
    let ExprKind::Binary { op_span, .. } = &cond.kind else { panic!() };
    assert_eq!(op_span.text(src), ">");
}

#[test]
fn casts_and_parenthesized_expressions_are_distinguished() {
    let src = "typedef unsigned u8; int g(int a) { int b = (u8)a + (a); return sizeof(int) + sizeof a; }";
    let u = Unit::parse(src).unwrap();
    let body = u.parse_body("g").unwrap();
    let StmtKind::Compound(items) = &body.kind else { panic!() };
    let StmtKind::Decl(inits) = &items[0].kind else { panic!() };
    let crate::ast::Initializer::Expr(e) = &inits[0] else { panic!() };
    let ExprKind::Binary { lhs, rhs, .. } = &e.kind else { panic!() };
    assert!(matches!(lhs.kind, ExprKind::Cast { .. }));
    assert!(matches!(rhs.kind, ExprKind::Paren(_)));
}

#[test]
fn bitfields_are_rejected_with_location() {
    let err = Unit::parse("struct s {\n  int a : 3;\n};").unwrap_err();
    match err {
        ParseError::Unsupported { kind, at } => {
            assert!(kind.contains("bit-field"));
            assert_eq!(at.line, 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn lenient_mode_skips_unsupported_declarations() {
    let src = "typedef struct { int a : 1; } Flags;\nint use(Flags *f, int x) { return x; }";
    assert!(Unit::parse(src).is_err());
    let u = Unit::parse_lenient(src).unwrap();
    assert_eq!(u.diagnostics.len(), 1);
    let flags = u.types.typedef("Flags").unwrap();
    assert_eq!(u.types.node_kind(flags), NodeKind::Opaque);
    assert!(u.function("use").is_some());
}

#[test]
fn attributes_and_packing() {
    let u = Unit::parse("struct __attribute__((packed)) s { char c; int i; } __attribute__((aligned(8)));").unwrap();
    let id = u.types.struct_tag_id(crate::ctype::RecordKind::Struct, "s").unwrap();
    assert!(u.types.canonical(id).ends_with("packed aligned(8)"));
}

#[test]
fn type_names_parse_standalone() {
    let mut u = Unit::parse("typedef struct q { int a; } Q;").unwrap();
    let t = u.parse_type_name("unsigned char").unwrap();
    assert_eq!(u.types.primitive(t), Some(PrimKind::UChar));
    let t = u.parse_type_name("Q *").unwrap();
    assert_eq!(u.types.node_kind(t), NodeKind::Pointer);
    assert!(u.parse_type_name("Q Q2").is_err());
}

#[test]
fn type_table_round_trips_through_c_source() {
    let src = "struct node; typedef struct node { struct node *next; int v[4]; } Node;\n\
               typedef enum color { RED, GREEN = 5 } Color;\n\
               typedef struct { union { int i; float f; } u; double (*fn)(int); } Mixed;";
    let a = Unit::parse(src).unwrap();
    let b = Unit::parse(&a.types.to_c_source()).unwrap();
    for name in ["Node", "Color", "Mixed"] {
        assert_eq!(canon(&a, name), canon(&b, name), "{name}");
    }
}

#[test]
fn const_evaluation() {
    let u = Unit::parse("enum { K = 7 };").unwrap();
    let toks = crate::lexer::tokenize("(K << 2) - 'A' % 3 ? 1 : 0").unwrap();
    let mut types = u.types.clone();
    let mut p = Parser::new("(K << 2) - 'A' % 3 ? 1 : 0", &toks, &mut types);
    let e = p.conditional_expr().unwrap();
    assert_eq!(eval_const(&e, "(K << 2) - 'A' % 3 ? 1 : 0", &types), Some(1));
}
