use super::lexer::{lex_line, Tok, Token};
use super::{DslDocument, DslError, DslErrorKind, Span, Statement};
use crate::geometry::Point2;
use crate::linkage::{Joint, JointKind, MechanismSpec, Parent, ValidationError};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum Value<T> {
    Num(T),
    Ref(String),
    Point(T, T),
}

#[derive(Debug, Clone)]
struct Arg<T> {
    keyword: Option<String>,
    value: Value<T>,
    col: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct RawStatement<T> {
    name: String,
    name_col: usize,
    kind: String,
    kind_col: usize,
    args: Vec<Arg<T>>,
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    end_col: usize,
}

type PResult<T> = Result<T, (usize, DslErrorKind)>;

fn syntax(col: usize, msg: impl Into<String>) -> (usize, DslErrorKind) {
    (col, DslErrorKind::Syntax(msg.into()))
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.col(), format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, usize)> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, col))
            }
            _ => Err(syntax(col, format!("expected {what}"))),
        }
    }

    fn number<T: Scalar>(&mut self) -> PResult<T> {
        let col = self.col();
        let negative = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                true
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        match self.bump().map(|t| &t.tok) {
            Some(Tok::Number(s)) => {
                let v = T::from_str(s).map_err(|_| syntax(col, format!("invalid number {s:?}")))?;
                Ok(if negative { -v } else { v })
            }
            _ => Err(syntax(col, "expected a number")),
        }
    }

    fn value<T: Scalar>(&mut self) -> PResult<Value<T>> {
        match self.peek() {
            Some(Tok::Ident(_)) => Ok(Value::Ref(self.ident("joint name")?.0)),
            Some(Tok::LParen) => {
                self.pos += 1;
                let x = self.number()?;
                self.expect(Tok::Comma, "',' in point literal")?;
                let y = self.number()?;
                self.expect(Tok::RParen, "')' closing point literal")?;
                Ok(Value::Point(x, y))
            }
            _ => Ok(Value::Num(self.number()?)),
        }
    }
}

/// Syntactic parse of one tokenized line: `name = [pl.]Kind(args)`.
fn parse_tokens<T: Scalar>(toks: &[Token], end_col: usize) -> PResult<RawStatement<T>> {
    let mut c = Cursor { toks, pos: 0, end_col };
    let (name, name_col) = c.ident("joint name")?;
    c.expect(Tok::Eq, "'='")?;
    let (mut kind, mut kind_col) = c.ident("joint kind")?;
    if c.peek() == Some(&Tok::Dot) {
        if kind != "pl" {
            return Err(syntax(kind_col, format!("unknown module prefix {kind:?}")));
        }
        c.pos += 1;
        (kind, kind_col) = c.ident("joint kind")?;
    }
    c.expect(Tok::LParen, "'('")?;
    let mut args = Vec::new();
    while c.peek() != Some(&Tok::RParen) {
        let col = c.col();
        let keyword = match (c.peek(), c.toks.get(c.pos + 1).map(|t| &t.tok)) {
            (Some(Tok::Ident(k)), Some(Tok::Eq)) => {
                let k = k.clone();
                c.pos += 2;
                Some(k)
            }
            _ => None,
        };
        let value = c.value()?;
        args.push(Arg { keyword, value, col });
        match c.peek() {
            Some(Tok::Comma) => c.pos += 1,
            Some(Tok::RParen) => {}
            _ => return Err(syntax(c.col(), "expected ',' or ')'")),
        }
    }
    c.pos += 1;
    if c.pos < toks.len() {
        return Err(syntax(c.col(), "unexpected tokens after ')'"));
    }
    Ok(RawStatement { name, name_col, kind, kind_col, args })
}

/// Lexes and syntactically parses a line. `Ok(None)` for blank or comment lines.
pub(crate) fn parse_line<T: Scalar>(line: &str) -> PResult<Option<RawStatement<T>>> {
    let toks = lex_line(line).map_err(|(col, msg)| (col, DslErrorKind::Lexical(msg)))?;
    if toks.is_empty() {
        return Ok(None);
    }
    parse_tokens(&toks, line.chars().count() + 1).map(Some)
}

#[derive(Clone, Copy, PartialEq)]
enum SlotTy {
    Num,
    Ref,
}

struct Slot {
    name: &'static str,
    aliases: &'static [&'static str],
    ty: SlotTy,
}

const fn slot(name: &'static str, aliases: &'static [&'static str], ty: SlotTy) -> Slot {
    Slot { name, aliases, ty }
}

const X: Slot = slot("x", &[], SlotTy::Num);
const Y: Slot = slot("y", &[], SlotTy::Num);
const STATIC: [Slot; 2] = [X, Y];
const CRANK: [Slot; 5] = [
    slot("parent", &["joint0", "p0", "parent0"], SlotTy::Ref),
    slot("distance", &["d", "d0", "r", "radius"], SlotTy::Num),
    slot("angle_step", &["angle"], SlotTy::Num),
    X,
    Y,
];
const REVOLUTE: [Slot; 6] = [
    slot("p0", &["joint0", "parent0", "parent"], SlotTy::Ref),
    slot("d0", &["distance0", "distance"], SlotTy::Num),
    slot("p1", &["joint1", "parent1"], SlotTy::Ref),
    slot("d1", &["distance1"], SlotTy::Num),
    X,
    Y,
];
const LINEAR: [Slot; 6] = [
    slot("p0", &["joint0", "parent0", "parent"], SlotTy::Ref),
    slot("revolute_radius", &["radius", "r", "distance", "distance0", "d0"], SlotTy::Num),
    slot("la", &["line_a", "joint1"], SlotTy::Ref),
    slot("lb", &["line_b", "joint2"], SlotTy::Ref),
    X,
    Y,
];

fn slots_for(kind: &str) -> Option<&'static [Slot]> {
    match kind {
        "Static" => Some(&STATIC),
        "Crank" => Some(&CRANK),
        "Revolute" => Some(&REVOLUTE),
        "Linear" => Some(&LINEAR),
        _ => None,
    }
}

/// Binds arguments to slots and builds the joint, collecting every problem.
fn bind<T: Scalar>(raw: RawStatement<T>, errors: &mut Vec<(usize, DslErrorKind)>) -> Option<Joint<T>> {
    let Some(slots) = slots_for(&raw.kind) else {
        errors.push((raw.kind_col, DslErrorKind::UnknownKind(raw.kind)));
        return None;
    };
    let before = errors.len();
    let mut bound: Vec<Option<Value<T>>> = vec![None; slots.len()];
    let mut seen_keyword = false;
    let mut next_positional = 0;
    for arg in raw.args {
        let idx = match &arg.keyword {
            None => {
                if seen_keyword {
                    errors.push((arg.col, DslErrorKind::Arity("positional argument after keyword argument".into())));
                    continue;
                }
                if next_positional >= slots.len() {
                    errors.push((
                        arg.col,
                        DslErrorKind::Arity(format!("{} takes at most {} arguments", raw.kind, slots.len())),
                    ));
                    continue;
                }
                next_positional += 1;
                next_positional - 1
            }
            Some(k) => {
                seen_keyword = true;
                match slots.iter().position(|s| s.name == k || s.aliases.contains(&k.as_str())) {
                    Some(i) => i,
                    None => {
                        errors.push((arg.col, DslErrorKind::Keyword(format!("{} has no argument {k:?}", raw.kind))));
                        continue;
                    }
                }
            }
        };
        let slot = &slots[idx];
        if bound[idx].is_some() {
            errors.push((arg.col, DslErrorKind::Keyword(format!("argument {:?} given more than once", slot.name))));
            continue;
        }
        let ok = matches!(
            (slot.ty, &arg.value),
            (SlotTy::Num, Value::Num(_)) | (SlotTy::Ref, Value::Ref(_) | Value::Point(..))
        );
        if !ok {
            let want = match slot.ty {
                SlotTy::Num => "a number",
                SlotTy::Ref => "a joint name or (x, y) anchor",
            };
            errors.push((arg.col, DslErrorKind::Type(format!("argument {:?} must be {want}", slot.name))));
            continue;
        }
        bound[idx] = Some(arg.value);
    }

    // x and y are the trailing pair; everything before is required.
    let required = if raw.kind == "Static" { slots.len() } else { slots.len() - 2 };
    let missing: Vec<&str> = (0..required).filter(|&i| bound[i].is_none()).map(|i| slots[i].name).collect();
    if !missing.is_empty() {
        errors.push((
            raw.kind_col,
            DslErrorKind::Arity(format!("{} is missing argument(s): {}", raw.kind, missing.join(", "))),
        ));
    }
    let n = slots.len();
    if raw.kind != "Static" && bound[n - 2].is_some() != bound[n - 1].is_some() {
        errors.push((raw.kind_col, DslErrorKind::Arity("x and y must be given together".into())));
    }
    if errors.len() > before {
        return None;
    }

    let num = |i: usize| match &bound[i] {
        Some(Value::Num(v)) => *v,
        _ => unreachable!("type checked"),
    };
    let parent = |i: usize| match &bound[i] {
        Some(Value::Ref(n)) => Parent::Joint(n.clone()),
        Some(Value::Point(x, y)) => Parent::Fixed(Point2::new(*x, *y)),
        _ => unreachable!("type checked"),
    };
    let initial = match (&bound[n - 2], &bound[n - 1]) {
        (Some(Value::Num(x)), Some(Value::Num(y))) => Some(Point2::new(*x, *y)),
        _ => None,
    };
    let kind = match raw.kind.as_str() {
        "Static" => JointKind::Static { x: num(0), y: num(1) },
        "Crank" => JointKind::Crank { parent: parent(0), distance: num(1), angle_step: num(2), initial },
        "Revolute" => JointKind::Revolute {
            parent0: parent(0),
            distance0: num(1),
            parent1: parent(2),
            distance1: num(3),
            initial,
        },
        _ => JointKind::Linear {
            parent0: parent(0),
            revolute_radius: num(1),
            line_a: parent(2),
            line_b: parent(3),
            initial,
        },
    };
    Some(Joint::new(raw.name, kind))
}

/// Parses a document into statements with source positions. Syntax and
/// argument errors are collected across all lines; structural validation
/// runs only when every line parsed.
pub fn parse_document<T: Scalar>(text: &str) -> Result<DslDocument<T>, Vec<DslError>> {
    let mut errors = Vec::new();
    let mut statements = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        match parse_line::<T>(line) {
            Ok(None) => {}
            Ok(Some(raw)) => {
                let span = Span { line: lineno, column: raw.name_col };
                let mut errs = Vec::new();
                if let Some(joint) = bind(raw, &mut errs) {
                    statements.push(Statement { joint, span });
                }
                errors.extend(errs.into_iter().map(|(col, kind)| DslError::at(lineno, col, kind)));
            }
            Err((col, kind)) => errors.push(DslError::at(lineno, col, kind)),
        }
    }
    if statements.is_empty() && errors.is_empty() {
        return Err(vec![DslError { span: None, kind: DslErrorKind::NoStatements }]);
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let doc = DslDocument { statements };
    if let Err(violations) = doc.to_spec().validate() {
        return Err(violations.into_iter().map(|v| locate(&doc, v)).collect());
    }
    Ok(doc)
}

fn locate<T>(doc: &DslDocument<T>, v: ValidationError) -> DslError {
    let span = v.joint().and_then(|name| {
        let mut hits = doc.statements.iter().filter(|s| s.joint.name == name).map(|s| s.span);
        match v {
            // Blame the redeclaration, not the original.
            ValidationError::DuplicateName(_) => hits.nth(1),
            _ => hits.next(),
        }
    });
    DslError { span, kind: DslErrorKind::Validation(v) }
}

/// Parses and validates a document into a mechanism.
pub fn parse<T: Scalar>(text: &str) -> Result<MechanismSpec<T>, Vec<DslError>> {
    parse_document(text).map(|d| d.to_spec())
}
