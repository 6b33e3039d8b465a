//! Adaptive Dormand-Prince 8(5,3) integrator (DOP853 tableau of Hairer,
//! Nørsett and Wanner) for autonomous systems `y' = f(y)`.
//!
//! Accepted steps are recorded as samples. Event location re-takes a single
//! fixed step of reduced size from the last accepted state, which keeps the
//! method's order without a dense-output interpolant.

// tableau digits as published
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// An autonomous vector field on `R^dim`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, y: &[f64], dy: &mut [f64]);

    /// Distance to the nearest singularity when it is below the collision
    /// floor, `None` otherwise.
    fn guard(&self, _y: &[f64]) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
    /// Bound the local error by `tol * min(|h|, 1)` instead of `tol`, so the
    /// global error grows like `tol * t` rather than with the step count.
    pub per_unit_step: bool,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options {
            rtol: tol,
            atol: tol,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
            per_unit_step: false,
        }
    }

    pub fn per_unit_step(mut self) -> Self {
        self.per_unit_step = true;
        self
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

// Stage nodes; the fields here are autonomous, so only the tests read them.
#[cfg_attr(not(test), allow(dead_code))]
const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488e-01,
    0.789002279381515978178381316732e-01,
    0.118350341907227396726757197510e+00,
    0.281649658092772603273242802490e+00,
    0.333333333333333333333333333333e+00,
    0.25e+00,
    0.307692307692307692307692307692e+00,
    0.651282051282051282051282051282e+00,
    0.6e+00,
    0.857142857142857142857142857142e+00,
    1.0,
];

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.26001519587677318785587544488e-2, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
    [
        1.97250569845378994544595329183e-2,
        5.91751709536136983633785987549e-2,
        0., 0., 0., 0., 0., 0., 0., 0., 0.,
    ],
    [
        2.95875854768068491816892993775e-2,
        0.0,
        8.87627564304205475450678981324e-2,
        0., 0., 0., 0., 0., 0., 0., 0.,
    ],
    [
        2.41365134159266685502369798665e-1,
        0.0,
        -8.84549479328286085344864962717e-1,
        9.24834003261792003115737966543e-1,
        0., 0., 0., 0., 0., 0., 0.,
    ],
    [
        3.7037037037037037037037037037e-2,
        0.0,
        0.0,
        1.70828608729473871279604482173e-1,
        1.25467687566822425016691814123e-1,
        0., 0., 0., 0., 0., 0.,
    ],
    [
        3.7109375e-2,
        0.0,
        0.0,
        1.70252211019544039314978060272e-1,
        6.02165389804559606850219397283e-2,
        -1.7578125e-2,
        0., 0., 0., 0., 0.,
    ],
    [
        3.70920001185047927108779319836e-2,
        0.0,
        0.0,
        1.70383925712239993810214054705e-1,
        1.07262030446373284651809199168e-1,
        -1.53194377486244017527936158236e-2,
        8.27378916381402288758473766002e-3,
        0., 0., 0., 0.,
    ],
    [
        6.24110958716075717114429577812e-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825e0,
        -8.68219346841726006818189891453e-1,
        2.75920996994467083049415600797e1,
        2.01540675504778934086186788979e1,
        -4.34898841810699588477366255144e1,
        0., 0., 0.,
    ],
    [
        4.77662536438264365890433908527e-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468e0,
        -5.90290826836842996371446475743e-1,
        2.12300514481811942347288949897e1,
        1.52792336328824235832596922938e1,
        -3.32882109689848629194453265587e1,
        -2.03312017085086261358222928593e-2,
        0., 0.,
    ],
    [
        -9.3714243008598732571704021658e-1,
        0.0,
        0.0,
        5.18637242884406370830023853209e0,
        1.09143734899672957818500254654e0,
        -8.14978701074692612513997267357e0,
        -1.85200656599969598641566180701e1,
        2.27394870993505042818970056734e1,
        2.49360555267965238987089396762e0,
        -3.0467644718982195003823669022e0,
        0.,
    ],
    [
        2.27331014751653820792359768449e0,
        0.0,
        0.0,
        -1.05344954667372501984066689879e1,
        -2.00087205822486249909675718444e0,
        -1.79589318631187989172765950534e1,
        2.79488845294199600508499808837e1,
        -2.85899827713502369474065508674e0,
        -8.87285693353062954433549289258e0,
        1.23605671757943030647266201528e1,
        6.43392746015763530355970484046e-1,
    ],
];

const B: [f64; 12] = [
    5.42937341165687622380535766363e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566e0,
    1.89151789931450038304281599044e0,
    -5.8012039600105847814672114227e0,
    3.1116436695781989440891606237e-1,
    -1.52160949662516078556178806805e-1,
    2.01365400804030348374776537501e-1,
    4.47106157277725905176885569043e-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512e+00,
    0.733846688281611857341361741547e+00,
    0.220588235294117647058823529412e-01,
];

const E: [f64; 12] = [
    0.1312004499419488073250102996e-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753e+01,
    -0.4957589496572501915214079952e+00,
    0.1664377182454986536961530415e+01,
    -0.3503288487499736816886487290e+00,
    0.3341791187130174790297318841e+00,
    0.8192320648511571246570742613e-01,
    -0.2235530786388629525884427845e-01,
];

struct Stepper<'a, F: VectorField> {
    field: &'a F,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl<'a, F: VectorField> Stepper<'a, F> {
    fn new(field: &'a F) -> Self {
        let n = field.dim();
        Stepper {
            field,
            k: vec![vec![0.0; n]; 12],
            tmp: vec![0.0; n],
        }
    }

    /// Fills stages 2..12 given `k[0] = f(y)` and returns the 8th-order update.
    fn stages(&mut self, y: &[f64], h: f64) -> Vec<f64> {
        let n = y.len();
        for s in 1..12 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (_, rest) = self.k.split_at_mut(s);
            self.field.eval(&self.tmp, &mut rest[0]);
        }
        (0..n)
            .map(|i| {
                let inc: f64 = (0..12).map(|s| B[s] * self.k[s][i]).sum();
                y[i] + h * inc
            })
            .collect()
    }

    fn error_norm(&self, y: &[f64], y_new: &[f64], h: f64, opts: &Options) -> f64 {
        let n = y.len();
        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..n {
            let sc = opts.atol + y[i].abs().max(y_new[i].abs()) * opts.rtol;
            let e: f64 = (0..12).map(|s| E[s] * self.k[s][i]).sum();
            let inc: f64 = (0..12).map(|s| B[s] * self.k[s][i]).sum();
            let e2 = inc - BHH[0] * self.k[0][i] - BHH[1] * self.k[8][i] - BHH[2] * self.k[11][i];
            err += (e / sc) * (e / sc);
            err2 += (e2 / sc) * (e2 / sc);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let norm = h.abs() * err * (1.0 / (deno * n as f64)).sqrt();
        if opts.per_unit_step {
            norm / h.abs().min(1.0)
        } else {
            norm
        }
    }
}

/// One DOP853 step of size `h` from `y` without error control.
pub fn single_step<F: VectorField>(field: &F, y: &[f64], h: f64) -> Vec<f64> {
    let mut st = Stepper::new(field);
    let mut k0 = vec![0.0; y.len()];
    field.eval(y, &mut k0);
    st.k[0] = k0;
    st.stages(y, h)
}

fn initial_step<F: VectorField>(field: &F, y: &[f64], f0: &[f64], dir: f64, opts: &Options) -> f64 {
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + v.abs() * opts.rtol).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(opts.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, d)| v + dir * h0 * d).collect();
    let mut f1 = vec![0.0; y.len()];
    field.eval(&y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Outcome of one adaptive attempt.
enum Attempt {
    Accepted { y: Vec<f64>, h_next: f64 },
    Rejected { h_next: f64 },
}

/// Adaptive driver state shared by the public entry points.
struct Driver<'a, F: VectorField> {
    st: Stepper<'a, F>,
    opts: Options,
    fac_old: f64,
    rejected_last: bool,
}

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

impl<'a, F: VectorField> Driver<'a, F> {
    fn new(field: &'a F, opts: Options) -> Self {
        Driver {
            st: Stepper::new(field),
            opts,
            fac_old: 1e-4,
            rejected_last: false,
        }
    }

    fn attempt(&mut self, y: &[f64], f0: &[f64], h: f64) -> Attempt {
        self.st.k[0].copy_from_slice(f0);
        let y_new = self.st.stages(y, h);
        if y_new.iter().any(|v| !v.is_finite()) {
            self.rejected_last = true;
            return Attempt::Rejected { h_next: h * 0.25 };
        }
        let err = self.st.error_norm(y, &y_new, h, &self.opts);
        if !err.is_finite() {
            self.rejected_last = true;
            return Attempt::Rejected { h_next: h * 0.25 };
        }
        let expo = 1.0 / 8.0;
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac11 / SAFE));
            let mut h_next = h / fac;
            self.fac_old = err.max(1e-4);
            if h_next.abs() > self.opts.max_step {
                h_next = h.signum() * self.opts.max_step;
            }
            if self.rejected_last {
                h_next = h.signum() * h_next.abs().min(h.abs());
            }
            self.rejected_last = false;
            Attempt::Accepted { y: y_new, h_next }
        } else {
            self.rejected_last = true;
            Attempt::Rejected {
                h_next: h / (1.0 / FAC_MIN).min(fac11 / SAFE),
            }
        }
    }
}

/// A sampled solution: accepted step times and states.
pub type Samples = Vec<(f64, Vec<f64>)>;

/// Integrates from `t = 0` to `t_end` (either sign), returning every accepted step.
pub fn integrate<F: VectorField>(field: &F, y0: &[f64], t_end: f64, opts: Options) -> Result<Samples> {
    let mut out = vec![(0.0, y0.to_vec())];
    run(field, y0, t_end, opts, |t, y| {
        out.push((t, y.to_vec()));
        None::<()>
    })?;
    Ok(out)
}

/// Integrates to `t_end` and returns the final state only.
pub fn integrate_to<F: VectorField>(field: &F, y0: &[f64], t_end: f64, opts: Options) -> Result<Vec<f64>> {
    let mut last = y0.to_vec();
    run(field, y0, t_end, opts, |_, y| {
        last.copy_from_slice(y);
        None::<()>
    })?;
    Ok(last)
}

/// States at the given increasing times (first time may be 0).
pub fn integrate_grid<F: VectorField>(field: &F, y0: &[f64], times: &[f64], opts: Options) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.to_vec();
    let mut t = 0.0;
    for &tk in times {
        if tk != t {
            y = integrate_to(field, &y, tk - t, opts)?;
            t = tk;
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// A located zero of an event function.
#[derive(Debug, Clone)]
pub struct Event {
    pub t: f64,
    pub y: Vec<f64>,
    /// Samples of the accepted steps up to (and including) the event.
    pub samples: Samples,
}

/// Integrates forward until `event(y)` changes sign at some `t > t_min`,
/// then bisects the crossing time to `t_tol`. Returns `None` if `t_max` is
/// reached first.
pub fn integrate_until<F, G>(
    field: &F,
    y0: &[f64],
    t_max: f64,
    t_min: f64,
    t_tol: f64,
    opts: Options,
    event: G,
) -> Result<Option<Event>>
where
    F: VectorField,
    G: Fn(&[f64]) -> f64,
{
    let mut samples = vec![(0.0, y0.to_vec())];
    let mut prev_t = 0.0;
    let mut prev_y = y0.to_vec();
    let mut prev_g = event(y0);
    let found = run(field, y0, t_max, opts, |t, y| {
        let g = event(y);
        let hit = t > t_min && (g == 0.0 || prev_g * g < 0.0);
        let r = if hit {
            Some((prev_t, prev_y.clone(), prev_g, t))
        } else {
            None
        };
        samples.push((t, y.to_vec()));
        prev_t = t;
        prev_y = y.to_vec();
        prev_g = g;
        r
    })?;
    let Some((t0, y_start, g0, t1)) = found else {
        return Ok(None);
    };
    // bisection on the step length from the last accepted state
    let mut lo = 0.0;
    let mut hi = t1 - t0;
    let mut y_hi = samples.last().unwrap().1.clone();
    while hi - lo > t_tol {
        let mid = 0.5 * (lo + hi);
        let ym = single_step(field, &y_start, mid);
        let gm = event(&ym);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            y_hi = ym;
            break;
        }
        if gm * g0 < 0.0 {
            hi = mid;
            y_hi = ym;
        } else {
            lo = mid;
        }
    }
    let y_event = if hi - lo == 0.0 { y_hi } else { single_step(field, &y_start, hi) };
    samples.pop();
    samples.push((t0 + hi, y_event.clone()));
    Ok(Some(Event {
        t: t0 + hi,
        y: y_event,
        samples,
    }))
}

/// Core loop. `on_step` is called after each accepted step; returning
/// `Some` stops the integration early.
fn run<F, R, S>(field: &F, y0: &[f64], t_end: f64, opts: Options, mut on_step: S) -> Result<Option<R>>
where
    F: VectorField,
    S: FnMut(f64, &[f64]) -> Option<R>,
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    if y0.len() != field.dim() {
        return Err(Error::InvalidInput(format!(
            "state has length {} but the field has dimension {}",
            y0.len(),
            field.dim()
        )));
    }
    if t_end == 0.0 {
        return Ok(None);
    }
    let dir = t_end.signum();
    let mut drv = Driver::new(field, opts);
    let mut y = y0.to_vec();
    let mut f0 = vec![0.0; y.len()];
    field.eval(&y, &mut f0);
    let mut t = 0.0;
    let mut h = dir * initial_step(field, &y, &f0, dir, &opts);
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(Error::Integrator {
                t,
                reason: format!("step budget of {} exhausted", opts.max_steps),
            });
        }
        if 0.1 * h.abs() <= f64::EPSILON * t.abs().max(1e-300) || h.abs() < 1e-300 {
            return Err(Error::Integrator {
                t,
                reason: "step size underflow".into(),
            });
        }
        let mut last = false;
        if (t + 1.01 * h - t_end) * dir > 0.0 {
            h = t_end - t;
            last = true;
        }
        steps += 1;
        match drv.attempt(&y, &f0, h) {
            Attempt::Accepted { y: y_new, h_next } => {
                if let Some((distance, floor)) = field.guard(&y_new) {
                    return Err(Error::CollisionApproach {
                        t: t + h,
                        distance,
                        floor,
                    });
                }
                t = if last { t_end } else { t + h };
                y = y_new;
                field.eval(&y, &mut f0);
                if let Some(r) = on_step(t, &y) {
                    return Ok(Some(r));
                }
                if last {
                    return Ok(None);
                }
                h = h_next;
            }
            Attempt::Rejected { h_next } => {
                h = h_next;
            }
        }
    }
}
