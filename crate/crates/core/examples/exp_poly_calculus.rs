//! Exponential-polynomial calculus: closed-form derivatives, origin shifts and
//! exact integrals of `Σ_p e^{r_p t} Σ_i G_{p,i} t^i`.

use pidelay::prelude::*;

pub struct Outcome {
    pub value: f64,
    pub third_derivative: f64,
    pub shifted_value: f64,
    pub integral: f64,
}

pub fn run_example() -> Result<Outcome> {
    // f(t) = 2 - t + e^{-t}(1 + 3t^2)
    let f = ExpPoly::from_terms([(0.0, vec![2.0, -1.0]), (-1.0, vec![1.0, 0.0, 3.0])]);
    let d3 = f.derivative(3)?;
    // g(s) = f(s + 0.5): the same curve seen from a new origin
    let g = f.shift_origin(0.5);
    let outcome = Outcome {
        value: f.evaluate(1.0),
        third_derivative: d3.evaluate(1.0),
        shifted_value: g.evaluate(0.5),
        integral: f.integrate(0.0, 2.0)?,
    };
    println!("f          = {f}");
    println!("f'''       = {d3}");
    println!("f(1)       = {:.12}", outcome.value);
    println!("f'''(1)    = {:.12}", outcome.third_derivative);
    println!("f(0.5+0.5) = {:.12}", outcome.shifted_value);
    println!("∫_0^2 f    = {:.12}", outcome.integral);
    Ok(outcome)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
