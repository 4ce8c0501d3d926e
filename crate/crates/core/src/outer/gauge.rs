//! Decreasing gauges `Ω(n)` given as expressions, evaluated on extended reals
//! so that dilations far beyond `u64` stay representable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real number stored as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XReal {
    neg: bool,
    ln: f64,
}

impl XReal {
    pub const ZERO: XReal = XReal { neg: false, ln: f64::NEG_INFINITY };

    pub fn new(x: f64) -> Self {
        Self { neg: x < 0.0, ln: x.abs().ln() }
    }

    /// `e^{ln}`.
    pub fn from_ln(ln: f64) -> Self {
        Self { neg: false, ln }
    }

    pub fn ln_abs(&self) -> f64 {
        self.ln
    }

    pub fn is_negative(&self) -> bool {
        self.neg && self.ln > f64::NEG_INFINITY
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.ln.exp();
        if self.neg {
            -m
        } else {
            m
        }
    }

    /// Natural log as an ordinary value; `None` for non-positive input.
    pub fn log(self) -> Option<XReal> {
        (!self.is_negative() && self.ln > f64::NEG_INFINITY).then(|| XReal::new(self.ln))
    }

    pub fn exp(self) -> XReal {
        XReal::from_ln(self.to_f64())
    }

    pub fn powf(self, b: f64) -> Option<XReal> {
        if self.is_negative() {
            if b.fract() != 0.0 {
                return None;
            }
            let odd = (b.abs() % 2.0) == 1.0;
            return Some(XReal { neg: odd, ln: b * self.ln });
        }
        Some(XReal::from_ln(b * self.ln))
    }

    pub fn lt(&self, o: &XReal) -> bool {
        match (self.is_negative(), o.is_negative()) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => self.ln < o.ln,
            (true, true) => self.ln > o.ln,
        }
    }
}

impl std::ops::Add for XReal {
    type Output = XReal;

    fn add(self, o: XReal) -> XReal {
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        if small.ln == f64::NEG_INFINITY {
            return big;
        }
        let r = (small.ln - big.ln).exp();
        if big.neg == small.neg {
            XReal { neg: big.neg, ln: big.ln + r.ln_1p() }
        } else if r == 1.0 {
            XReal::ZERO
        } else {
            XReal { neg: big.neg, ln: big.ln + (-r).ln_1p() }
        }
    }
}

impl std::ops::Sub for XReal {
    type Output = XReal;

    fn sub(self, o: XReal) -> XReal {
        self + (-o)
    }
}

impl std::ops::Neg for XReal {
    type Output = XReal;

    fn neg(self) -> XReal {
        XReal { neg: !self.neg, ln: self.ln }
    }
}

impl std::ops::Mul for XReal {
    type Output = XReal;

    fn mul(self, o: XReal) -> XReal {
        XReal { neg: self.neg != o.neg, ln: self.ln + o.ln }
    }
}

impl std::ops::Div for XReal {
    type Output = XReal;

    fn div(self, o: XReal) -> XReal {
        XReal { neg: self.neg != o.neg, ln: self.ln - o.ln }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Log,
    Exp,
    Sqrt,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    fn eval(&self, n: XReal) -> Option<XReal> {
        Some(match self {
            Expr::Num(x) => XReal::new(*x),
            Expr::Var => n,
            Expr::Neg(a) => -a.eval(n)?,
            Expr::Add(a, b) => a.eval(n)? + b.eval(n)?,
            Expr::Sub(a, b) => a.eval(n)? - b.eval(n)?,
            Expr::Mul(a, b) => a.eval(n)? * b.eval(n)?,
            Expr::Div(a, b) => a.eval(n)? / b.eval(n)?,
            Expr::Pow(a, b) => a.eval(n)?.powf(b.eval(n)?.to_f64())?,
            Expr::Call(f, args) => {
                let x = args[0].eval(n)?;
                match f {
                    Func::Log => x.log()?,
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.powf(0.5)?,
                    Func::Pow => x.powf(args[1].eval(n)?.to_f64())?,
                }
            }
        })
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.primary()?;
        if self.eat(b'^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    let exp_sign = (c == b'+' || c == b'-') && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match text.parse::<f64>() {
                    Ok(x) => Ok(Expr::Num(x)),
                    Err(_) => {
                        self.pos = start;
                        self.err(format!("bad number '{text}'"))
                    }
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                let func = match name {
                    "n" | "t" => return Ok(Expr::Var),
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Num(std::f64::consts::E)),
                    "log" | "ln" => Func::Log,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "pow" => Func::Pow,
                    _ => {
                        self.pos = start;
                        return self.err(format!("unknown identifier '{name}'"));
                    }
                };
                if !self.eat(b'(') {
                    return self.err(format!("expected '(' after {name}"));
                }
                let mut args = vec![self.expr()?];
                while self.eat(b',') {
                    args.push(self.expr()?);
                }
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                let want = if func == Func::Pow { 2 } else { 1 };
                if args.len() != want {
                    return self.err(format!("{name} takes {want} argument(s)"));
                }
                Ok(Expr::Call(func, args))
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }
}

/// A positive nonincreasing gauge `Ω`, parsed from an expression in `n`
/// (or `t`) with `+ - * / ^`, `log`, `exp`, `sqrt`, `pow` and `pi`, `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGauge {
    source: String,
    expr: Expr,
}

impl OmegaGauge {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let expr = p.expr()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        let g = Self { source: src.to_string(), expr };
        g.check_shape()?;
        Ok(g)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval_x(&self, n: XReal) -> Result<XReal> {
        self.expr
            .eval(n)
            .filter(|v| !v.ln.is_nan())
            .ok_or_else(|| Error::Precondition(format!("{} undefined at n = e^{}", self.source, n.ln)))
    }

    pub fn eval(&self, n: f64) -> Result<f64> {
        Ok(self.eval_x(XReal::new(n))?.to_f64())
    }

    /// Positivity and monotonicity on `1..=4096` and on `n = 2^k`, `k ≤ 4096`.
    fn check_shape(&self) -> Result<()> {
        let points = (1..=4096).map(|n| XReal::new(n as f64)).chain((13..=4096).map(|k| XReal::from_ln(k as f64 * 2f64.ln())));
        let mut prev: Option<XReal> = None;
        for n in points {
            let v = self.eval_x(n)?;
            // A zero after positive values is underflow of the log magnitude.
            if v.is_negative() || (v.ln == f64::NEG_INFINITY && prev.is_none()) {
                return Err(Error::Precondition(format!("{} is not positive at n = e^{}", self.source, n.ln)));
            }
            if let Some(p) = prev {
                if p.lt(&v) && (v.ln - p.ln) > 1e-12 {
                    return Err(Error::Precondition(format!("{} increases at n = e^{}", self.source, n.ln)));
                }
            }
            prev = Some(v);
        }
        Ok(())
    }

    /// `sup_t Φ(t/2)/Φ(t)` over the given points.
    pub fn doubling_constant(&self, ts: impl IntoIterator<Item = f64>) -> Result<f64> {
        let mut d = 0f64;
        for t in ts {
            d = d.max((self.eval_x(XReal::new(t / 2.0))?.ln - self.eval_x(XReal::new(t))?.ln).exp());
        }
        Ok(d)
    }
}

impl Serialize for OmegaGauge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for OmegaGauge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        OmegaGauge::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A positive integer dilation; beyond `u64` only `ln N` is kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dilation {
    Exact(u64),
    Huge { ln: f64 },
}

impl Dilation {
    pub fn to_xreal(&self) -> XReal {
        match *self {
            Dilation::Exact(n) => XReal::new(n as f64),
            Dilation::Huge { ln } => XReal::from_ln(ln),
        }
    }

    pub fn ln(&self) -> f64 {
        self.to_xreal().ln
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            Dilation::Exact(n) => Some(n),
            Dilation::Huge { .. } => None,
        }
    }
}

impl fmt::Display for Dilation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dilation::Exact(n) => write!(f, "{n}"),
            Dilation::Huge { ln } => write!(f, "exp({})", crate::numeric::fmt17(*ln)),
        }
    }
}

/// Largest `N` handled by exact integer search.
const EXACT_LIMIT: u64 = 1 << 52;

/// Relative slack on the gate comparison, absorbing log-domain rounding.
const GATE_SLACK: f64 = 1e-12;

/// Smallest `N ≥ n_min` with `Ω(N)·norm ≤ gate`. Exact below `2^52`;
/// above, `ln N` is located by bisection to relative precision `1e-13` and
/// rounded up so the gate still holds.
pub fn select_dilation(omega: &OmegaGauge, norm: f64, gate: f64, n_min: u64) -> Result<Dilation> {
    if !(norm > 0.0 && gate > 0.0) {
        return Err(Error::InvalidParameter("norm and gate must be positive".into()));
    }
    let target = XReal::new(gate / norm * (1.0 + GATE_SLACK));
    let passes = |n: XReal| -> Result<bool> { Ok(!target.lt(&omega.eval_x(n)?)) };
    let n_min = n_min.max(1);
    if passes(XReal::new(n_min as f64))? {
        return Ok(Dilation::Exact(n_min));
    }
    let mut lo = n_min;
    let mut hi = n_min;
    while hi < EXACT_LIMIT {
        hi = (hi.saturating_mul(2)).min(EXACT_LIMIT);
        if passes(XReal::new(hi as f64))? {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if passes(XReal::new(mid as f64))? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Dilation::Exact(hi));
        }
        lo = hi;
    }
    let mut ln_lo = (EXACT_LIMIT as f64).ln();
    let mut ln_hi = ln_lo;
    loop {
        ln_hi *= 2.0;
        if !ln_hi.is_finite() {
            return Err(Error::SearchExhausted(format!("{} never drops below {}", omega.source, gate / norm)));
        }
        if passes(XReal::from_ln(ln_hi))? {
            break;
        }
        ln_lo = ln_hi;
    }
    while (ln_hi - ln_lo) > 1e-13 * ln_hi {
        let mid = 0.5 * (ln_lo + ln_hi);
        if passes(XReal::from_ln(mid))? {
            ln_hi = mid;
        } else {
            ln_lo = mid;
        }
    }
    Ok(Dilation::Huge { ln: ln_hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let g = OmegaGauge::parse("1/log(2+n)").unwrap();
        assert!((g.eval(10.0).unwrap() - 1.0 / 12f64.ln()).abs() < 1e-15);
        let h = OmegaGauge::parse("pow(1+t, -2)").unwrap();
        assert!((h.eval(3.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let k = OmegaGauge::parse("2^-n * 3e-1").unwrap();
        assert!((k.eval(2.0).unwrap() - 0.075).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(OmegaGauge::parse("1/log(2+m)"), Err(Error::Parse { pos: 8, .. })));
        assert!(matches!(OmegaGauge::parse("1/(n"), Err(Error::Parse { .. })));
        assert!(matches!(OmegaGauge::parse("n"), Err(Error::Precondition(_))));
        assert!(matches!(OmegaGauge::parse("n-3"), Err(Error::Precondition(_))));
    }

    #[test]
    fn xreal_arithmetic_survives_huge_arguments() {
        let g = OmegaGauge::parse("1/log(2+n)").unwrap();
        let v = g.eval_x(XReal::from_ln(1e5)).unwrap();
        assert!((v.to_f64() - 1e-5).abs() < 1e-18);
        let x = XReal::new(3.0) + XReal::new(-5.0);
        assert!((x.to_f64() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_gate_is_arithmetic() {
        let g = OmegaGauge::parse("1/n").unwrap();
        assert_eq!(select_dilation(&g, 5.0, 0.01, 1).unwrap(), Dilation::Exact(500));
        assert_eq!(select_dilation(&g, 5.0, 0.005, 1).unwrap(), Dilation::Exact(1000));
    }

    #[test]
    fn log_gauge_goes_huge() {
        let g = OmegaGauge::parse("1/log(2+n)").unwrap();
        let d = select_dilation(&g, 1e4, 0.1, 1).unwrap();
        let Dilation::Huge { ln } = d else { panic!("{d:?}") };
        assert!((ln - 1e5).abs() < 1e-7 * 1e5);
        assert!(g.eval_x(d.to_xreal()).unwrap().to_f64() * 1e4 <= 0.1 * (1.0 + 1e-12));
    }

    #[test]
    fn doubling_of_inverse_square() {
        let g = OmegaGauge::parse("(1+t)^-2").unwrap();
        let d = g.doubling_constant((1..=10_000).map(|k| k as f64 * 0.01)).unwrap();
        assert!(d <= 4.0 && d > 3.9);
    }
}
