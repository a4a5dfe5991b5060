use std::f64::consts::{E, PI};

/// A scalar function of two variables with a default sampling box.
pub trait TaskFunction: Send + Sync {
    fn id(&self) -> &str;
    fn eval(&self, x1: f64, x2: f64) -> f64;
    /// `[(lo, hi); 2]` box used when a task does not override it.
    fn default_domain(&self) -> [(f64, f64); 2];
}

/// Closed-form function given by a plain function pointer.
pub struct Builtin {
    pub id: &'static str,
    pub f: fn(f64, f64) -> f64,
    pub domain: [(f64, f64); 2],
}

impl TaskFunction for Builtin {
    fn id(&self) -> &str {
        self.id
    }

    fn eval(&self, x1: f64, x2: f64) -> f64 {
        (self.f)(x1, x2)
    }

    fn default_domain(&self) -> [(f64, f64); 2] {
        self.domain
    }
}

const fn square(a: f64) -> [(f64, f64); 2] {
    [(-a, a), (-a, a)]
}

fn constant(_: f64, _: f64) -> f64 {
    5.0
}

fn linear(x: f64, y: f64) -> f64 {
    x + 2.0 * y
}

fn sphere(x: f64, y: f64) -> f64 {
    x * x + y * y
}

fn rosenbrock(x: f64, y: f64) -> f64 {
    (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
}

fn rastrigin(x: f64, y: f64) -> f64 {
    20.0 + [x, y].iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

fn ackley(x: f64, y: f64) -> f64 {
    -20.0 * (-0.2 * (0.5 * (x * x + y * y)).sqrt()).exp() - (0.5 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())).exp()
        + E
        + 20.0
}

fn griewank(x: f64, y: f64) -> f64 {
    1.0 + (x * x + y * y) / 4000.0 - x.cos() * (y / 2f64.sqrt()).cos()
}

fn schwefel(x: f64, y: f64) -> f64 {
    418.9829 * 2.0 - x * x.abs().sqrt().sin() - y * y.abs().sqrt().sin()
}

fn himmelblau(x: f64, y: f64) -> f64 {
    (x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2)
}

fn levy(x: f64, y: f64) -> f64 {
    let w1 = 1.0 + (x - 1.0) / 4.0;
    let w2 = 1.0 + (y - 1.0) / 4.0;
    (PI * w1).sin().powi(2)
        + (w1 - 1.0).powi(2) * (1.0 + 10.0 * (PI * w1 + 1.0).sin().powi(2))
        + (w2 - 1.0).powi(2) * (1.0 + (2.0 * PI * w2).sin().powi(2))
}

fn booth(x: f64, y: f64) -> f64 {
    (x + 2.0 * y - 7.0).powi(2) + (2.0 * x + y - 5.0).powi(2)
}

fn three_hump_camel(x: f64, y: f64) -> f64 {
    2.0 * x * x - 1.05 * x.powi(4) + x.powi(6) / 6.0 + x * y + y * y
}

fn easom(x: f64, y: f64) -> f64 {
    -x.cos() * y.cos() * (-((x - PI).powi(2) + (y - PI).powi(2))).exp()
}

fn styblinski_tang(x: f64, y: f64) -> f64 {
    0.5 * [x, y].iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>()
}

pub static BUILTINS: &[Builtin] = &[
    Builtin { id: "constant", f: constant, domain: square(1.0) },
    Builtin { id: "linear", f: linear, domain: square(1.0) },
    Builtin { id: "sphere", f: sphere, domain: square(5.0) },
    Builtin { id: "rosenbrock", f: rosenbrock, domain: square(2.0) },
    Builtin { id: "rastrigin", f: rastrigin, domain: square(5.12) },
    Builtin { id: "ackley", f: ackley, domain: square(5.0) },
    Builtin { id: "griewank", f: griewank, domain: square(10.0) },
    Builtin { id: "schwefel", f: schwefel, domain: square(500.0) },
    Builtin { id: "himmelblau", f: himmelblau, domain: square(5.0) },
    Builtin { id: "levy", f: levy, domain: square(10.0) },
    Builtin { id: "booth", f: booth, domain: square(10.0) },
    Builtin { id: "three_hump_camel", f: three_hump_camel, domain: square(5.0) },
    Builtin { id: "easom", f: easom, domain: [(0.0, 2.0 * PI), (0.0, 2.0 * PI)] },
    Builtin { id: "styblinski_tang", f: styblinski_tang, domain: square(5.0) },
];

pub fn builtin_function(id: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.id == id)
}
