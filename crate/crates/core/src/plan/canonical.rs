use super::{Binding, PlanNode};

/// Integer/decimal text in a canonical numeric form: no sign on zero, no
/// leading zeros, no trailing fractional zeros (`007` → `7`, `1.50` → `1.5`,
/// `1.0` → `1`). Returns `None` for anything that is not `[+-]?\d+(\.\d+)?`.
pub fn normalize_number(text: &str) -> Option<String> {
    let (negative, digits) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.contains('.') && (frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let int = int.trim_start_matches('0');
    let frac = frac.trim_end_matches('0');
    let mut out = String::new();
    if negative && !(int.is_empty() && frac.is_empty()) {
        out.push('-');
    }
    out.push_str(if int.is_empty() { "0" } else { int });
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    Some(out)
}

/// Trimmed literal text, numerically normalized when it looks like a number.
pub fn normalize_literal(text: &str) -> String {
    let trimmed = text.trim();
    normalize_number(trimmed).unwrap_or_else(|| trimmed.to_string())
}

/// Recursively sorts bindings by argument name and normalizes literal text.
/// API names are left untouched.
pub fn canonicalize(node: &PlanNode) -> PlanNode {
    let mut bindings: Vec<(String, Binding)> = node
        .bindings
        .iter()
        .map(|(arg, binding)| {
            let b = match binding {
                Binding::Literal { text, value_type } => Binding::Literal {
                    text: normalize_literal(text),
                    value_type: *value_type,
                },
                Binding::SubCall(child) => Binding::SubCall(Box::new(canonicalize(child))),
                other => other.clone(),
            };
            (arg.clone(), b)
        })
        .collect();
    bindings.sort_by(|a, b| a.0.cmp(&b.0));
    PlanNode {
        api_name: node.api_name.clone(),
        bindings: bindings.into_iter().collect(),
    }
}

/// Structural equality of canonical forms. Literal type tags are ignored and
/// literal text is compared case-sensitively after normalization.
pub fn equivalent(a: &PlanNode, b: &PlanNode) -> bool {
    canonical_eq(&canonicalize(a), &canonicalize(b))
}

fn canonical_eq(a: &PlanNode, b: &PlanNode) -> bool {
    a.api_name == b.api_name
        && a.bindings.len() == b.bindings.len()
        && a.bindings
            .iter()
            .zip(b.bindings.iter())
            .all(|((ka, va), (kb, vb))| ka == kb && binding_eq(va, vb))
}

fn binding_eq(a: &Binding, b: &Binding) -> bool {
    match (a, b) {
        (Binding::Literal { text: ta, .. }, Binding::Literal { text: tb, .. }) => ta == tb,
        (Binding::SubCall(ca), Binding::SubCall(cb)) => canonical_eq(ca, cb),
        (Binding::AskUser { .. }, Binding::AskUser { .. }) => true,
        (Binding::Unfilled, Binding::Unfilled) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{nesting_depth, parse_call_expr};

    fn p(text: &str) -> PlanNode {
        parse_call_expr(text).unwrap().remove(0)
    }

    #[test]
    fn numbers() {
        assert_eq!(normalize_number("10").as_deref(), Some("10"));
        assert_eq!(normalize_number("10.0").as_deref(), Some("10"));
        assert_eq!(normalize_number("007").as_deref(), Some("7"));
        assert_eq!(normalize_number("0.50").as_deref(), Some("0.5"));
        assert_eq!(normalize_number("-0.0").as_deref(), Some("0"));
        assert_eq!(normalize_number("+3").as_deref(), Some("3"));
        assert_eq!(normalize_number("000").as_deref(), Some("0"));
        assert_eq!(normalize_number("09:00"), None);
        assert_eq!(normalize_number("1."), None);
        assert_eq!(normalize_number(".5"), None);
        assert_eq!(normalize_number("1e5"), None);
        assert_eq!(normalize_number(""), None);
    }

    #[test]
    fn sorts_by_name() {
        assert_eq!(canonicalize(&p("F(b='2', a='1')")), p("F(a='1', b='2')"));
    }

    #[test]
    fn trims_and_keeps_times() {
        // '09:00' is not numeric, so only whitespace changes
        assert_eq!(canonicalize(&p("F(x=' 09:00 ')")), p("F(x='09:00')"));
    }

    #[test]
    fn permuted_arguments_are_equivalent() {
        assert!(equivalent(
            &p("F(a='1', b=G(y=\"2\", x='3'))"),
            &p("F(b=G(x='3', y='2'), a='1')")
        ));
    }

    #[test]
    fn literal_in_place_of_call_is_not_equivalent() {
        assert!(!equivalent(
            &p("BookRoom(person_ID=Name2ID(person_name='Jack'))"),
            &p("BookRoom(person_ID='Jack')")
        ));
    }

    #[test]
    fn numeric_noise_is_equivalent_but_case_is_not() {
        assert!(equivalent(&p("F(x='10')"), &p("F(x=10.0)")));
        assert!(!equivalent(&p("F(x='New York')"), &p("F(x='new york')")));
        assert!(!equivalent(&p("F(x='1')"), &p("f(x='1')")));
    }

    #[test]
    fn idempotent_and_depth_preserving() {
        let t = p("A(z=B(q=' 01 ', p=C()), a='x')");
        let c = canonicalize(&t);
        assert_eq!(canonicalize(&c), c);
        assert_eq!(nesting_depth(&c), nesting_depth(&t));
    }
}
