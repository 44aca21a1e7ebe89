//! Recursive-descent parser.

use super::lexer::{tokenize, Tok};
use super::*;

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(SyntaxError::new(self.span(), msg))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().1)
        } else {
            self.error(format!(
                "expected {}, found {}",
                t.describe(),
                self.peek().describe()
            ))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            Tok::Ident(s) => self.error(format!("`{s}` is reserved and cannot be used as {what}")),
            other => self.error(format!("expected {what}, found {}", other.describe())),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            other => self.error(format!("expected an integer, found {}", other.describe())),
        }
    }

    fn small(&mut self, what: &str) -> PResult<u32> {
        let sp = self.span();
        let v = self.int()?;
        u32::try_from(v)
            .map_err(|_| SyntaxError::new(sp, format!("{what} must be a non-negative integer")))
    }

    // ---- expressions -------------------------------------------------

    fn expr(&mut self) -> PResult<SExpr> {
        let mut lhs = self.implies()?;
        while self.peek() == &Tok::Iff {
            let sp = self.bump().1;
            let rhs = self.implies()?;
            lhs = SExpr::new(SKind::Bin(BinOp::Iff, Box::new(lhs), Box::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<SExpr> {
        let lhs = self.or()?;
        if self.peek() == &Tok::Arrow {
            let sp = self.bump().1;
            let rhs = self.implies()?;
            return Ok(SExpr::new(
                SKind::Bin(BinOp::Implies, Box::new(lhs), Box::new(rhs)),
                sp,
            ));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<SExpr> {
        let mut lhs = self.and()?;
        while self.peek() == &Tok::Pipe {
            let sp = self.bump().1;
            let rhs = self.and()?;
            lhs = SExpr::new(SKind::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<SExpr> {
        let mut lhs = self.unary()?;
        while self.peek() == &Tok::Amp {
            let sp = self.bump().1;
            let rhs = self.unary()?;
            lhs = SExpr::new(SKind::Bin(BinOp::And, Box::new(lhs), Box::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<SExpr> {
        let sp = self.span();
        if self.eat(&Tok::Bang) {
            let e = self.unary()?;
            return Ok(SExpr::new(SKind::Not(Box::new(e)), sp));
        }
        if self.is_kw("Y") {
            self.bump();
            let n = if self.eat(&Tok::Caret) {
                self.small("the exponent of Y")?
            } else {
                1
            };
            let e = self.unary()?;
            return Ok(SExpr::new(SKind::Y(n, Box::new(e)), sp));
        }
        if self.is_kw("O") {
            self.bump();
            let bound = if self.eat(&Tok::Le) {
                Some(self.small("the bound of O")?)
            } else {
                None
            };
            let e = self.unary()?;
            return Ok(SExpr::new(SKind::O(bound, Box::new(e)), sp));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<SExpr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        let sp = self.bump().1;
        let rhs = self.additive()?;
        Ok(SExpr::new(SKind::Bin(op, Box::new(lhs), Box::new(rhs)), sp))
    }

    fn additive(&mut self) -> PResult<SExpr> {
        let mut lhs = self.negation()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let sp = self.bump().1;
            let rhs = self.negation()?;
            lhs = SExpr::new(SKind::Bin(op, Box::new(lhs), Box::new(rhs)), sp);
        }
    }

    fn negation(&mut self) -> PResult<SExpr> {
        let sp = self.span();
        if self.peek() == &Tok::Minus {
            self.bump();
            if let Tok::Int(v) = *self.peek() {
                self.bump();
                return Ok(SExpr::new(SKind::Int(-v), sp));
            }
            let e = self.negation()?;
            return Ok(SExpr::new(SKind::Neg(Box::new(e)), sp));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<SExpr> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(SExpr::new(SKind::Int(v), sp))
            }
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                self.expect(&Tok::RParen)?;
                e.span = sp;
                Ok(e)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(SExpr::new(SKind::Bool(word == "true"), sp))
                }
                "if" => {
                    self.bump();
                    let c = self.expr()?;
                    self.expect_kw("then")?;
                    let t = self.expr()?;
                    self.expect_kw("else")?;
                    let e = self.expr()?;
                    Ok(SExpr::new(
                        SKind::Ite(Box::new(c), Box::new(t), Box::new(e)),
                        sp,
                    ))
                }
                "min" | "max" if self.peek_at(1) == &Tok::LParen => {
                    self.bump();
                    self.bump();
                    let a = self.expr()?;
                    self.expect(&Tok::Comma)?;
                    let b = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    let f = if word == "min" { Func::Min } else { Func::Max };
                    Ok(SExpr::new(SKind::Call(f, Box::new(a), Box::new(b)), sp))
                }
                "event" if self.peek_at(1) == &Tok::Colon => {
                    self.bump();
                    self.bump();
                    let (name, _) = self.ident("an event name")?;
                    Ok(SExpr::new(SKind::Event(name), sp))
                }
                _ => {
                    let (name, _) = self.ident("an identifier")?;
                    if self.eat(&Tok::Prime) {
                        Ok(SExpr::new(SKind::Primed(name), sp))
                    } else {
                        Ok(SExpr::new(SKind::Ident(name), sp))
                    }
                }
            },
            other => self.error(format!(
                "expected an expression, found {}",
                other.describe()
            )),
        }
    }

    // ---- models ------------------------------------------------------

    fn model(&mut self) -> PResult<ModelDoc> {
        let mut doc = ModelDoc::default();
        if self.eat_kw("model") {
            doc.name = self.ident("a model name")?.0;
        }
        while self.peek() != &Tok::Eof {
            let sp = self.span();
            let word = match self.peek() {
                Tok::Ident(w) => w.clone(),
                other => {
                    return self.error(format!(
                        "expected a declaration, found {}",
                        other.describe()
                    ))
                }
            };
            self.bump();
            let item = match word.as_str() {
                "var" => {
                    let (name, _) = self.ident("a variable name")?;
                    self.expect(&Tok::Colon)?;
                    let domain = self.domain()?;
                    Item::Var {
                        name,
                        domain,
                        span: sp,
                    }
                }
                "event" => {
                    let (name, _) = self.ident("an event name")?;
                    let observable = self.eat_kw("obs");
                    Item::Event {
                        name,
                        observable,
                        span: sp,
                    }
                }
                "define" => {
                    let (name, _) = self.ident("a definition name")?;
                    self.expect(&Tok::Define)?;
                    let body = self.expr()?;
                    Item::Define {
                        name,
                        body,
                        span: sp,
                    }
                }
                "init" => Item::Init {
                    expr: self.expr()?,
                    span: sp,
                },
                "trans" => {
                    let (event, _) = self.ident("an event name")?;
                    let guard = if self.eat(&Tok::Colon) {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    let mut updates = Vec::new();
                    if self.eat(&Tok::FatArrow) {
                        loop {
                            let usp = self.span();
                            let (var, _) = self.ident("a variable name")?;
                            self.expect(&Tok::Prime)?;
                            self.expect(&Tok::Eq)?;
                            let rhs = self.expr()?;
                            updates.push(Update {
                                var,
                                rhs,
                                span: usp,
                            });
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    Item::Trans {
                        event,
                        guard,
                        updates,
                        span: sp,
                    }
                }
                other => {
                    return Err(SyntaxError::new(
                        sp,
                        format!("unknown declaration `{other}`"),
                    ));
                }
            };
            doc.items.push(item);
        }
        Ok(doc)
    }

    fn domain(&mut self) -> PResult<DomainSpec> {
        if self.eat_kw("bool") {
            return Ok(DomainSpec::Bool);
        }
        if self.eat(&Tok::LBrace) {
            let mut vals = Vec::new();
            loop {
                vals.push(self.ident("a value name")?.0);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBrace)?;
            return Ok(DomainSpec::Enum(vals));
        }
        let sp = self.span();
        let lo = self.int()?;
        self.expect(&Tok::DotDot)?;
        let hi = self.int()?;
        if hi < lo {
            return Err(SyntaxError::new(sp, format!("empty range {lo}..{hi}")));
        }
        Ok(DomainSpec::Range(lo, hi))
    }

    // ---- specifications ---------------------------------------------

    fn spec(&mut self) -> PResult<SpecDoc> {
        let mut doc = SpecDoc::default();
        while self.peek() != &Tok::Eof {
            let sp = self.expect_kw("alarm")?;
            let (name, _) = self.ident("an alarm name")?;
            self.expect(&Tok::Colon)?;
            let psp = self.span();
            let (pname, _) = match self.peek().clone() {
                Tok::Ident(s) => (s, self.bump().1),
                other => {
                    return self.error(format!("expected a pattern, found {}", other.describe()))
                }
            };
            let pattern = match pname.as_str() {
                "exactdel" => PatternKind::ExactDel,
                "bounddel" => PatternKind::BoundDel,
                "finitedel" => PatternKind::FiniteDel,
                other => {
                    return Err(SyntaxError::new(
                        psp,
                        format!(
                            "unknown pattern `{other}`, expected exactdel, bounddel or finitedel"
                        ),
                    ))
                }
            };
            self.expect(&Tok::LParen)?;
            let beta = self.expr()?;
            let delay = if pattern == PatternKind::FiniteDel {
                0
            } else {
                self.expect(&Tok::Comma)?;
                self.int()?
            };
            self.expect(&Tok::RParen)?;
            self.expect_kw("diag")?;
            self.expect(&Tok::Eq)?;
            let dsp = self.span();
            let diag = match self.bump().0 {
                Tok::Ident(s) if s == "system" => Diag::System,
                Tok::Ident(s) if s == "trace" => Diag::Trace,
                other => {
                    return Err(SyntaxError::new(
                        dsp,
                        format!("expected `system` or `trace`, found {}", other.describe()),
                    ))
                }
            };
            let maximal = self.eat_kw("maximal");
            doc.alarms.push(AlarmDecl {
                name,
                pattern,
                delay,
                beta,
                diag,
                maximal,
                span: sp,
            });
        }
        Ok(doc)
    }
}

pub fn parse_model_doc(src: &str) -> Result<ModelDoc, SyntaxError> {
    Parser::new(src)?.model()
}

pub fn parse_spec_doc(src: &str) -> Result<SpecDoc, SyntaxError> {
    Parser::new(src)?.spec()
}

/// Parses a standalone expression or past formula.
pub fn parse_expr(src: &str) -> Result<SExpr, SyntaxError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return p.error(format!(
            "unexpected {} after expression",
            p.peek().describe()
        ));
    }
    Ok(e)
}
