//! Exact coefficient arithmetic for R_alpha = (X d/dX)^alpha (X+1)/(X-1).
//!
//! Every R_alpha has denominator (X-1)^{alpha+1}; the numerators satisfy
//! N_{alpha+1} = X [(X-1) N_alpha' - (alpha+1) N_alpha], which keeps the
//! coefficients in integers. Floating differentiation loses all digits near
//! the pole at X = 1, so this is done symbolically.

use num_complex::Complex64;

use crate::{Error, Result};

pub const MAX_ALPHA: usize = 12;

/// Numerator / (X-1)^{pole_order}, numerator coefficients ascending in X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFunction {
    numerator: Vec<i128>,
    pole_order: usize,
}

fn poly_derivative(p: &[i128]) -> Vec<i128> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as i128)
        .collect()
}

fn poly_mul_x_minus_one(p: &[i128]) -> Vec<i128> {
    // (X - 1) * p
    let mut out = vec![0i128; p.len() + 1];
    for (i, &c) in p.iter().enumerate() {
        out[i + 1] += c;
        out[i] -= c;
    }
    out
}

fn poly_mul_x(p: &[i128]) -> Vec<i128> {
    let mut out = Vec::with_capacity(p.len() + 1);
    out.push(0);
    out.extend_from_slice(p);
    out
}

fn poly_axpy(a: i128, x: &[i128], y: &mut Vec<i128>) {
    if y.len() < x.len() {
        y.resize(x.len(), 0);
    }
    for (i, &c) in x.iter().enumerate() {
        y[i] += a * c;
    }
}

fn poly_trim(p: &mut Vec<i128>) {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
}

fn poly_eval(p: &[i128], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        acc = acc * x + c as f64;
    }
    acc
}

/// R_alpha for 0 <= alpha <= 12.
pub fn r_alpha(alpha: usize) -> Result<RationalFunction> {
    if alpha > MAX_ALPHA {
        return Err(Error::AlphaOutOfRange { alpha, max: MAX_ALPHA });
    }
    let mut num: Vec<i128> = vec![1, 1]; // X + 1
    for step in 0..alpha {
        let pole = step + 1;
        let deriv = poly_derivative(&num);
        let mut next = poly_mul_x_minus_one(&deriv);
        poly_axpy(-(pole as i128), &num, &mut next);
        num = poly_mul_x(&next);
        poly_trim(&mut num);
    }
    Ok(RationalFunction { numerator: num, pole_order: alpha + 1 })
}

impl RationalFunction {
    pub fn numerator(&self) -> &[i128] {
        &self.numerator
    }

    pub fn pole_order(&self) -> usize {
        self.pole_order
    }

    /// Denominator coefficients of (X-1)^{pole_order}, ascending.
    pub fn denominator(&self) -> Vec<i128> {
        let mut den = vec![1i128];
        for _ in 0..self.pole_order {
            den = poly_mul_x_minus_one(&den);
        }
        den
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let num = poly_eval(&self.numerator, x);
        let den = (x - 1.0).powu(self.pole_order as u32);
        num / den
    }
}
