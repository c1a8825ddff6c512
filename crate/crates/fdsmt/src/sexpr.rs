//! S-expression reading and writing for the SMT-LIB2 surface syntax.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::Atom(_) => None,
            Sexp::List(items) => Some(items),
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Strips `;` comments (SMT-LIB has no string literals we care about).
fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| match l.find(';') {
            Some(p) => &l[..p],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// True when the text is a complete sequence of s-expressions (all
/// parentheses closed). Used to chunk a command stream: input is buffered
/// until it balances, then parsed and executed as a whole.
pub fn balanced(text: &str) -> bool {
    let text = strip_comments(text);
    let mut depth: i64 = 0;
    let mut seen_open = false;
    for ch in text.chars() {
        match ch {
            '(' => {
                depth += 1;
                seen_open = true;
            }
            ')' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return true; // malformed; let the parser report it
        }
    }
    if seen_open {
        depth == 0
    } else {
        !text.trim().is_empty()
    }
}

pub fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let text = strip_comments(text);
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }

    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let mut top: Vec<Sexp> = Vec::new();
    for tok in tokens {
        match tok.as_str() {
            "(" => {
                stack.push(std::mem::take(&mut top));
                top = Vec::new();
            }
            ")" => {
                let done = Sexp::List(std::mem::take(&mut top));
                top = stack.pop().ok_or("unbalanced ')'")?;
                top.push(done);
            }
            _ => top.push(Sexp::Atom(tok)),
        }
    }
    if !stack.is_empty() {
        return Err("unbalanced '('".into());
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let exprs = parse_all("(assert (= (f 0 1) 2)) (check-sat)").unwrap();
        assert_eq!(exprs.len(), 2);
        assert_eq!(exprs[0].to_string(), "(assert (= (f 0 1) 2))");
        assert_eq!(exprs[1].to_string(), "(check-sat)");
    }

    #[test]
    fn comments_are_stripped() {
        let exprs = parse_all("(exit) ; bye\n").unwrap();
        assert_eq!(exprs.len(), 1);
    }

    #[test]
    fn balance_detection() {
        assert!(!balanced("(assert (= a"));
        assert!(balanced("(assert (= a b))"));
        assert!(!balanced("(assert (= a b)) (check"));
        assert!(balanced("(assert (= a b)) (check-sat)"));
    }
}
