use super::{Action, ApcpsSpec, ChanId, LabelId, MsgId, NtId, Rule};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate {kind} {name}")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown {kind} {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("missing start declaration")]
    MissingStart,
    #[error("{0}")]
    Invalid(String),
}

const KEYWORDS: &[&str] = &[
    "channels", "messages", "labels", "start", "rule", "send", "recv", "spawn", "label", "eps", "->",
    "|",
];

#[derive(Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok { text: &line[s..i], col: line[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &line[s..], col: line[..s].chars().count() + 1 });
    }
    out
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '.')
        && !KEYWORDS.contains(&s)
}

struct Names {
    kind: &'static str,
    list: Vec<String>,
    index: HashMap<String, u16>,
}

impl Names {
    fn new(kind: &'static str) -> Self {
        Names { kind, list: Vec::new(), index: HashMap::new() }
    }

    fn declare(&mut self, tok: Tok, line: usize) -> Result<u16, ParseError> {
        if !is_name(tok.text) {
            return Err(err(line, tok.col, ParseErrorKind::Syntax(format!("invalid name `{}`", tok.text))));
        }
        if self.index.contains_key(tok.text) {
            return Err(err(
                line,
                tok.col,
                ParseErrorKind::Duplicate { kind: self.kind, name: tok.text.to_string() },
            ));
        }
        let id = self.list.len() as u16;
        self.list.push(tok.text.to_string());
        self.index.insert(tok.text.to_string(), id);
        Ok(id)
    }

    fn lookup(&self, tok: Tok, line: usize) -> Result<u16, ParseError> {
        self.index.get(tok.text).copied().ok_or_else(|| {
            err(line, tok.col, ParseErrorKind::Unknown { kind: self.kind, name: tok.text.to_string() })
        })
    }
}

fn err(line: usize, col: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, col, kind }
}

/// Parses the line-oriented specification format.
///
/// A rule line may list several alternatives separated by `|`.
pub fn parse_spec(text: &str) -> Result<ApcpsSpec, ParseError> {
    let mut chans = Names::new("channel");
    let mut msgs = Names::new("message");
    let mut labels = Names::new("label");
    let mut nts = Names::new("non-terminal");
    let mut start: Option<(Tok, usize)> = None;
    let mut rule_lines: Vec<(usize, Vec<Tok>)> = Vec::new();

    // First pass: declarations and rule left-hand sides, so rules may refer forward.
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let toks = tokenize(raw);
        let Some(head) = toks.first().copied() else { continue };
        match head.text {
            "channels" => {
                for t in &toks[1..] {
                    chans.declare(*t, ln)?;
                }
            }
            "messages" => {
                for t in &toks[1..] {
                    msgs.declare(*t, ln)?;
                }
            }
            "labels" => {
                for t in &toks[1..] {
                    labels.declare(*t, ln)?;
                }
            }
            "start" => {
                if toks.len() != 2 {
                    return Err(err(ln, head.col, ParseErrorKind::Syntax("expected `start Name`".into())));
                }
                if start.is_some() {
                    return Err(err(
                        ln,
                        toks[1].col,
                        ParseErrorKind::Duplicate { kind: "start declaration", name: toks[1].text.into() },
                    ));
                }
                start = Some((toks[1], ln));
            }
            "rule" => {
                if toks.len() < 4 || toks[2].text != "->" {
                    let col = toks.get(2).map_or(head.col, |t| t.col);
                    return Err(err(ln, col, ParseErrorKind::Syntax("expected `rule LHS -> body`".into())));
                }
                if !is_name(toks[1].text) {
                    return Err(err(
                        ln,
                        toks[1].col,
                        ParseErrorKind::Syntax(format!("invalid non-terminal `{}`", toks[1].text)),
                    ));
                }
                if !nts.index.contains_key(toks[1].text) {
                    nts.declare(toks[1], ln)?;
                }
                rule_lines.push((ln, toks));
            }
            other => {
                return Err(err(ln, head.col, ParseErrorKind::Syntax(format!("unexpected `{other}`"))));
            }
        }
    }

    let (start_tok, start_ln) = start.ok_or_else(|| err(text.lines().count().max(1), 1, ParseErrorKind::MissingStart))?;
    let start = NtId(nts.lookup(start_tok, start_ln)?);

    let mut rules = Vec::new();
    for (ln, toks) in &rule_lines {
        let lhs = NtId(nts.lookup(toks[1], *ln)?);
        for alt in toks[3..].split(|t| t.text == "|") {
            let col = alt.first().map_or(toks.last().unwrap().col, |t| t.col);
            rules.push(parse_body(lhs, alt, *ln, col, &chans, &msgs, &labels, &nts)?);
        }
    }

    let spec = ApcpsSpec::new(chans.list, msgs.list, labels.list, nts.list, start, rules);
    if let Some(d) = spec.validate().into_iter().next() {
        return Err(err(0, 0, ParseErrorKind::Invalid(d)));
    }
    Ok(spec)
}

#[allow(clippy::too_many_arguments)]
fn parse_body(
    lhs: NtId,
    alt: &[Tok],
    ln: usize,
    col: usize,
    chans: &Names,
    msgs: &Names,
    labels: &Names,
    nts: &Names,
) -> Result<Rule, ParseError> {
    let syntax = |col: usize, msg: &str| err(ln, col, ParseErrorKind::Syntax(msg.to_string()));
    let Some(first) = alt.first() else {
        return Err(syntax(col, "empty alternative"));
    };
    let (action, rest) = match first.text {
        "eps" => {
            if alt.len() != 1 {
                return Err(syntax(alt[1].col, "`eps` must stand alone"));
            }
            return Ok(Rule::Simple { lhs, body: None });
        }
        "send" | "recv" => {
            if alt.len() < 3 {
                return Err(syntax(first.col, "expected channel and message"));
            }
            let c = ChanId(chans.lookup(alt[1], ln)?);
            let m = MsgId(msgs.lookup(alt[2], ln)?);
            let a = if first.text == "send" { Action::Send(c, m) } else { Action::Recv(c, m) };
            (a, &alt[3..])
        }
        "spawn" => {
            if alt.len() < 2 {
                return Err(syntax(first.col, "expected a non-terminal"));
            }
            (Action::Spawn(NtId(nts.lookup(alt[1], ln)?)), &alt[2..])
        }
        "label" => {
            if alt.len() < 2 {
                return Err(syntax(first.col, "expected a label"));
            }
            (Action::Label(LabelId(labels.lookup(alt[1], ln)?)), &alt[2..])
        }
        _ => {
            if alt.len() != 2 {
                return Err(syntax(first.col, "expected `Name Name`"));
            }
            let a = NtId(nts.lookup(alt[0], ln)?);
            let b = NtId(nts.lookup(alt[1], ln)?);
            return Ok(Rule::Call { lhs, first: a, second: b });
        }
    };
    match rest {
        [] => Ok(Rule::Simple { lhs, body: Some(action) }),
        [next] => Ok(Rule::TailCall { lhs, action, next: NtId(nts.lookup(*next, ln)?) }),
        [_, extra, ..] => Err(syntax(extra.col, "trailing tokens")),
    }
}
