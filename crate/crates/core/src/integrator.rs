//! Dormand–Prince 5(4) with the 4th-order continuous extension, for the
//! two-dimensional `(position, velocity)` systems used by the dynamics.

pub type Vec2 = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(y: Vec2, terms: &[(f64, &Vec2)], h: f64) -> Vec2 {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Result of one trial step.
#[derive(Debug, Clone)]
pub struct Step {
    pub t0: f64,
    pub h: f64,
    pub y0: Vec2,
    pub y1: Vec2,
    /// Weighted RMS error estimate; the step is acceptable when `<= 1`.
    pub error: f64,
    cont: [Vec2; 5],
}

impl Step {
    /// Continuous extension at `t` in `[t0, t0 + h]`.
    pub fn dense(&self, t: f64) -> Vec2 {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.cont;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
        out
    }
}

/// One Dormand–Prince step from `(t0, y0)` of size `h`.
pub fn dopri_step<F: Fn(f64, Vec2) -> Vec2>(
    f: &F,
    t0: f64,
    y0: Vec2,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Step {
    let k1 = f(t0, y0);
    let k2 = f(t0 + C2 * h, axpy(y0, &[(A21, &k1)], h));
    let k3 = f(t0 + C3 * h, axpy(y0, &[(A31, &k1), (A32, &k2)], h));
    let k4 = f(
        t0 + C4 * h,
        axpy(y0, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
    );
    let k5 = f(
        t0 + C5 * h,
        axpy(y0, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = f(
        t0 + h,
        axpy(
            y0,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ),
    );
    let y1 = axpy(
        y0,
        &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        h,
    );
    let k7 = f(t0 + h, y1);

    let mut sq = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = abs_tol + rel_tol * y0[i].abs().max(y1[i].abs());
        sq += (e / sc).powi(2);
    }
    let error = (sq / 2.0).sqrt();

    let mut cont = [[0.0; 2]; 5];
    for i in 0..2 {
        let diff = y1[i] - y0[i];
        let bspl = h * k1[i] - diff;
        cont[0][i] = y0[i];
        cont[1][i] = diff;
        cont[2][i] = bspl;
        cont[3][i] = diff - h * k7[i] - bspl;
        cont[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step {
        t0,
        h,
        y0,
        y1,
        error,
        cont,
    }
}

/// Step-size factor from an error estimate.
pub fn step_factor(error: f64) -> f64 {
    if error == 0.0 {
        5.0
    } else {
        (0.9 * error.powf(-0.2)).clamp(0.2, 5.0)
    }
}
