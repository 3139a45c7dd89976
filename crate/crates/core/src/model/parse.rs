use std::collections::HashMap;
use std::fmt;

use super::{AtomicConstraint, Conjunction, Edge, Location, Pta, Relation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    DuplicateLocation(String),
    DuplicateClock(String),
    UnknownIdentifier(String),
    ProbabilityOutOfRange(String),
    InvariantNotUpperBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::DuplicateLocation(n) => write!(f, "duplicate location `{n}`"),
            ParseErrorKind::DuplicateClock(n) => write!(f, "duplicate clock `{n}`"),
            ParseErrorKind::UnknownIdentifier(n) => write!(f, "unknown identifier `{n}`"),
            ParseErrorKind::ProbabilityOutOfRange(w) => {
                write!(f, "probability out of range: {w} is not in (0, 1]")
            }
            ParseErrorKind::InvariantNotUpperBound => {
                write!(f, "invariants may only contain upper bounds `x <= c` or `x < c`")
            }
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex_line(line_no: usize, text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ParseError {
        line: line_no,
        column: col,
        kind: ParseErrorKind::Syntax(msg),
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: line_no,
                column: col,
            })
        };
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            push(&mut out, Tok::Number(chars[start..i].iter().collect()));
        } else if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i >= chars.len() {
                return Err(err(col, "unterminated string".into()));
            }
            push(&mut out, Tok::Str(chars[start..i].iter().collect()));
            i += 1;
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym = match two.as_str() {
                "<=" => Some("<="),
                ">=" => Some(">="),
                "==" => Some("=="),
                "->" => Some("->"),
                "&&" => Some("&&"),
                _ => None,
            };
            if let Some(s) = sym {
                push(&mut out, Tok::Sym(s));
                i += 2;
                continue;
            }
            let s = match c {
                '<' => "<",
                '>' => ">",
                '=' => "=",
                '-' => "-",
                ',' => ",",
                '&' => "&",
                _ => return Err(err(col, format!("unexpected character `{c}`"))),
            };
            push(&mut out, Tok::Sym(s));
            i += 1;
        }
    }
    Ok(out)
}

const EDGE_KEYWORDS: [&str; 4] = ["action", "guard", "reset", "weight"];
const LOCATION_KEYWORDS: [&str; 4] = ["initial", "final", "invariant", "label"];

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .map(|t| (t.line, t.column))
            .unwrap_or((self.line, self.end_col))
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError {
            line,
            column,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn ident(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t @ Token { tok: Tok::Ident(_), .. }) => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Sym(s), .. }) if *s == sym => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected `{sym}`"))),
        }
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == sym)
    }

    fn at_keyword(&self, set: &[&str]) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if set.contains(&s.as_str()))
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

fn ident_text(t: &Token) -> &str {
    match &t.tok {
        Tok::Ident(s) => s,
        _ => unreachable!("ident_text on non-identifier"),
    }
}

/// A clock reference awaiting resolution, with its source position.
#[derive(Debug, Clone)]
struct ClockRef {
    name: String,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
struct RawAtom {
    left: ClockRef,
    right: Option<ClockRef>,
    relation: Relation,
    bound: i64,
    line: usize,
    column: usize,
}

/// Parses `atom (& atom)*`; `=`/`==` expand into a `<=` and a `>=` atom.
fn parse_conjunction(cur: &mut Cursor, stop: &[&str]) -> Result<Vec<RawAtom>, ParseError> {
    let mut atoms = Vec::new();
    loop {
        if let Some(Token { tok: Tok::Ident(s), .. }) = cur.peek() {
            if s == "true" {
                cur.next();
                if !(cur.at_sym("&") || cur.at_sym("&&")) {
                    break;
                }
                cur.next();
                continue;
            }
        }
        let lt = cur.ident("clock name")?;
        let left = ClockRef {
            name: ident_text(lt).to_string(),
            line: lt.line,
            column: lt.column,
        };
        let mut right = None;
        if cur.at_sym("-") {
            cur.next();
            let rt = cur.ident("clock name after `-`")?;
            right = Some(ClockRef {
                name: ident_text(rt).to_string(),
                line: rt.line,
                column: rt.column,
            });
        }
        let rel = match cur.next() {
            Some(Token { tok: Tok::Sym(s), .. }) => *s,
            _ => {
                cur.pos = cur.pos.saturating_sub(1);
                return Err(cur.error("expected a comparison operator"));
            }
        };
        let negative = if cur.at_sym("-") {
            cur.next();
            true
        } else {
            false
        };
        let bound = match cur.next() {
            Some(Token { tok: Tok::Number(n), .. }) => n.parse::<i64>().map_err(|_| {
                cur.pos -= 1;
                cur.error(format!("clock bounds must be integers, found `{n}`"))
            })?,
            _ => {
                cur.pos = cur.pos.saturating_sub(1);
                return Err(cur.error("expected an integer bound"));
            }
        };
        let bound = if negative { -bound } else { bound };
        let mk = |relation| RawAtom {
            left: left.clone(),
            right: right.clone(),
            relation,
            bound,
            line: lt.line,
            column: lt.column,
        };
        match rel {
            "<" => atoms.push(mk(Relation::Lt)),
            "<=" => atoms.push(mk(Relation::Le)),
            ">=" => atoms.push(mk(Relation::Ge)),
            ">" => atoms.push(mk(Relation::Gt)),
            "=" | "==" => {
                atoms.push(mk(Relation::Le));
                atoms.push(mk(Relation::Ge));
            }
            other => {
                cur.pos -= 2;
                return Err(cur.error(format!("`{other}` is not a comparison operator")));
            }
        }
        let and_word = matches!(cur.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == "and");
        if cur.at_sym("&") || cur.at_sym("&&") || and_word {
            cur.next();
        } else if cur.done() || cur.at_keyword(stop) {
            break;
        } else {
            return Err(cur.error("expected `&` or end of constraint"));
        }
    }
    Ok(atoms)
}

struct RawLocation {
    loc: Location,
    invariant: Vec<RawAtom>,
}

struct RawEdge {
    source: ClockRef,
    target: ClockRef,
    action: String,
    guard: Vec<RawAtom>,
    resets: Vec<ClockRef>,
    weight: f64,
}

/// Parses the textual model language.
pub fn parse_model(text: &str) -> Result<Pta, ParseError> {
    let mut name: Option<String> = None;
    let mut clocks: Vec<String> = Vec::new();
    let mut locations: Vec<RawLocation> = Vec::new();
    let mut loc_names: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<RawEdge> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(line_no, raw_line)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: line_no,
            end_col: raw_line.chars().count() + 1,
        };
        let head = cur.ident("a declaration keyword")?;
        match ident_text(head) {
            "pta" => match cur.next() {
                Some(Token { tok: Tok::Str(s), .. }) => name = Some(s.clone()),
                Some(Token { tok: Tok::Ident(s), .. }) => name = Some(s.clone()),
                _ => return Err(cur.error("expected a model name")),
            },
            "clocks" => {
                while !cur.done() {
                    let t = cur.ident("clock name")?;
                    let n = ident_text(t).to_string();
                    if clocks.contains(&n) {
                        return Err(ParseError {
                            line: t.line,
                            column: t.column,
                            kind: ParseErrorKind::DuplicateClock(n),
                        });
                    }
                    clocks.push(n);
                    if !cur.done() {
                        cur.expect_sym(",")?;
                    }
                }
            }
            "location" => {
                let t = cur.ident("location name")?;
                let n = ident_text(t).to_string();
                if loc_names.contains_key(&n) {
                    return Err(ParseError {
                        line: t.line,
                        column: t.column,
                        kind: ParseErrorKind::DuplicateLocation(n),
                    });
                }
                let mut loc = Location {
                    name: n.clone(),
                    labels: Vec::new(),
                    invariant: Conjunction::default(),
                    initial: false,
                    is_final: false,
                };
                let mut invariant = Vec::new();
                while !cur.done() {
                    let kw = cur.ident("a location attribute")?;
                    match ident_text(kw) {
                        "initial" => loc.initial = true,
                        "final" => loc.is_final = true,
                        "label" => loc.labels.push(ident_text(cur.ident("label")?).to_string()),
                        "invariant" => {
                            let atoms = parse_conjunction(&mut cur, &LOCATION_KEYWORDS)?;
                            if let Some(bad) = atoms
                                .iter()
                                .find(|a| a.right.is_some() || !a.relation.is_upper())
                            {
                                return Err(ParseError {
                                    line: bad.line,
                                    column: bad.column,
                                    kind: ParseErrorKind::InvariantNotUpperBound,
                                });
                            }
                            invariant.extend(atoms);
                        }
                        other => {
                            return Err(ParseError {
                                line: kw.line,
                                column: kw.column,
                                kind: ParseErrorKind::Syntax(format!(
                                    "unknown location attribute `{other}`"
                                )),
                            })
                        }
                    }
                }
                loc_names.insert(n, locations.len());
                locations.push(RawLocation { loc, invariant });
            }
            "edge" => {
                let s = cur.ident("source location")?;
                cur.expect_sym("->")?;
                let t = cur.ident("target location")?;
                let mut edge = RawEdge {
                    source: ClockRef {
                        name: ident_text(s).to_string(),
                        line: s.line,
                        column: s.column,
                    },
                    target: ClockRef {
                        name: ident_text(t).to_string(),
                        line: t.line,
                        column: t.column,
                    },
                    action: "tau".to_string(),
                    guard: Vec::new(),
                    resets: Vec::new(),
                    weight: 1.0,
                };
                while !cur.done() {
                    let kw = cur.ident("an edge attribute")?;
                    match ident_text(kw) {
                        "action" => edge.action = ident_text(cur.ident("action name")?).to_string(),
                        "guard" => edge.guard.extend(parse_conjunction(&mut cur, &EDGE_KEYWORDS)?),
                        "reset" => loop {
                            let c = cur.ident("clock name")?;
                            edge.resets.push(ClockRef {
                                name: ident_text(c).to_string(),
                                line: c.line,
                                column: c.column,
                            });
                            if cur.at_sym(",") {
                                cur.next();
                            } else {
                                break;
                            }
                        },
                        "weight" => {
                            let wt = cur.next();
                            let text = match wt {
                                Some(Token { tok: Tok::Number(n), .. }) => n.clone(),
                                _ => {
                                    cur.pos = cur.pos.saturating_sub(usize::from(wt.is_some()));
                                    return Err(cur.error("expected a decimal weight"));
                                }
                            };
                            let wt = wt.expect("checked above");
                            let w: f64 = text.parse().map_err(|_| ParseError {
                                line: wt.line,
                                column: wt.column,
                                kind: ParseErrorKind::Syntax(format!("malformed weight `{text}`")),
                            })?;
                            if !(w > 0.0 && w <= 1.0) {
                                return Err(ParseError {
                                    line: wt.line,
                                    column: wt.column,
                                    kind: ParseErrorKind::ProbabilityOutOfRange(text),
                                });
                            }
                            edge.weight = w;
                        }
                        other => {
                            return Err(ParseError {
                                line: kw.line,
                                column: kw.column,
                                kind: ParseErrorKind::Syntax(format!("unknown edge attribute `{other}`")),
                            })
                        }
                    }
                }
                edges.push(edge);
            }
            other => {
                return Err(ParseError {
                    line: head.line,
                    column: head.column,
                    kind: ParseErrorKind::Syntax(format!("unknown declaration `{other}`")),
                })
            }
        }
    }

    let unknown = |r: &ClockRef| ParseError {
        line: r.line,
        column: r.column,
        kind: ParseErrorKind::UnknownIdentifier(r.name.clone()),
    };
    let clock = |r: &ClockRef| -> Result<usize, ParseError> {
        clocks
            .iter()
            .position(|c| *c == r.name)
            .map(|i| i + 1)
            .ok_or_else(|| unknown(r))
    };
    let resolve = |atoms: &[RawAtom]| -> Result<Conjunction, ParseError> {
        let conjuncts = atoms
            .iter()
            .map(|a| {
                Ok(AtomicConstraint {
                    left: clock(&a.left)?,
                    right: a.right.as_ref().map(clock).transpose()?.unwrap_or(0),
                    relation: a.relation,
                    bound: a.bound,
                })
            })
            .collect::<Result<_, ParseError>>()?;
        Ok(Conjunction { conjuncts })
    };

    let mut locs = Vec::with_capacity(locations.len());
    for raw in &locations {
        let mut loc = raw.loc.clone();
        loc.invariant = resolve(&raw.invariant)?;
        locs.push(loc);
    }
    let mut out_edges = Vec::with_capacity(edges.len());
    for (id, raw) in edges.iter().enumerate() {
        let source = *loc_names.get(&raw.source.name).ok_or_else(|| unknown(&raw.source))?;
        let target = *loc_names.get(&raw.target.name).ok_or_else(|| unknown(&raw.target))?;
        let resets = raw.resets.iter().map(clock).collect::<Result<Vec<_>, _>>()?;
        out_edges.push(Edge {
            id,
            source,
            action: raw.action.clone(),
            guard: resolve(&raw.guard)?,
            resets,
            target,
            weight: raw.weight,
        });
    }

    Ok(Pta {
        name: name.unwrap_or_else(|| "unnamed".to_string()),
        clocks,
        locations: locs,
        edges: out_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE1: &str = include_str!("../../models/example1.pta");

    #[test]
    fn example1_structure() {
        let pta = parse_model(EXAMPLE1).unwrap();
        assert_eq!(pta.locations.len(), 4);
        assert_eq!(pta.edges.len(), 4);
        let w: Vec<f64> = pta.out_edges(0).map(|e| e.weight).collect();
        assert_eq!(w, vec![0.4, 0.6]);
        assert_eq!(pta.initial(), Some(0));
    }

    #[test]
    fn degenerate_model() {
        let pta = parse_model("pta \"d\"\nlocation Only initial final\n").unwrap();
        assert!(pta.clocks.is_empty());
        assert_eq!(pta.locations.len(), 1);
        assert!(pta.locations[0].initial && pta.locations[0].is_final);
    }

    #[test]
    fn weight_out_of_range() {
        let src = "pta \"w\"\nlocation A initial\nlocation B final\nedge A -> B weight 1.2\n";
        let err = parse_model(src).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ProbabilityOutOfRange("1.2".into()));
        assert_eq!((err.line, err.column), (4, 20));
        assert!(err.to_string().contains("probability out of range"));
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_model("pta \"s\"\nlocation A initial invariant x <= \n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        let err = parse_model("pta \"s\"\nclocks x\nlocation A invariant x <= 2 ? \n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 29));
    }

    #[test]
    fn duplicates_and_unknowns() {
        let e = parse_model("clocks x, x\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateClock("x".into()));
        let e = parse_model("location A\nlocation A\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateLocation("A".into()));
        let e = parse_model("clocks x\nlocation A initial invariant y <= 1\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("y".into()));
        let e = parse_model("clocks x\nlocation A initial\nedge A -> A reset z\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("z".into()));
        let e = parse_model("location A initial\nedge A -> Nowhere\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("Nowhere".into()));
        assert_eq!((e.line, e.column), (2, 11));
    }

    #[test]
    fn equality_expands_and_invariants_are_upper_bounds() {
        let pta = parse_model("clocks x, y\nlocation A initial\nedge A -> A guard x == 3 & x - y < -1\n").unwrap();
        let g = &pta.edges[0].guard.conjuncts;
        assert_eq!(g.len(), 3);
        assert_eq!(g[0].relation, Relation::Le);
        assert_eq!(g[1].relation, Relation::Ge);
        assert_eq!((g[2].left, g[2].right, g[2].bound), (1, 2, -1));
        let e = parse_model("clocks x\nlocation A invariant x >= 1\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvariantNotUpperBound);
    }

    #[test]
    fn comments_and_true() {
        let src = "# header\npta \"c\" # trailing\nclocks x\nlocation A initial invariant true & x <= 4\n";
        let pta = parse_model(src).unwrap();
        assert_eq!(pta.locations[0].invariant.conjuncts.len(), 1);
        assert_eq!(pta.name, "c");
    }

    #[test]
    fn print_then_parse_is_identity() {
        let pta = parse_model(EXAMPLE1).unwrap();
        let again = parse_model(&pta.to_string()).unwrap();
        assert_eq!(pta, again);
    }
}
