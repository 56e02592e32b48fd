//! Brute-force dense-matrix oracle, independent of the simulator's
//! gate-application path. Gates become full 2^n x 2^n matrices which are
//! multiplied out and applied to basis vectors.

use num_complex::Complex64;
use qml_core::qstate::{CircuitDescription, Gate};

pub type Matrix = Vec<Vec<Complex64>>;

fn zeros(n: usize) -> Matrix {
    vec![vec![Complex64::new(0.0, 0.0); n]; n]
}

fn identity(n: usize) -> Matrix {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn single_qubit(u: [[Complex64; 2]; 2], target: usize, n_qubits: usize) -> Matrix {
    let dim = 1 << n_qubits;
    let mask = 1usize << target;
    let mut m = zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            if (i & !mask) == (j & !mask) {
                let bi = usize::from(i & mask != 0);
                let bj = usize::from(j & mask != 0);
                m[i][j] = u[bi][bj];
            }
        }
    }
    m
}

/// Full-space matrix of one gate, qubit 0 = least-significant index bit.
pub fn gate_matrix(gate: &Gate, n_qubits: usize) -> Matrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match *gate {
        Gate::Ry { target, angle } => {
            let (s, co) = (angle / 2.0).sin_cos();
            single_qubit([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]], target, n_qubits)
        }
        Gate::Rz { target, angle } => single_qubit(
            [
                [Complex64::from_polar(1.0, -angle / 2.0), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, angle / 2.0)],
            ],
            target,
            n_qubits,
        ),
        Gate::H { target } => {
            let f = std::f64::consts::FRAC_1_SQRT_2;
            single_qubit([[c(f, 0.0), c(f, 0.0)], [c(f, 0.0), c(-f, 0.0)]], target, n_qubits)
        }
        Gate::Cx { control, target } => {
            let dim = 1 << n_qubits;
            let cmask = 1usize << control;
            let tmask = 1usize << target;
            let mut m = zeros(dim);
            for j in 0..dim {
                let i = if j & cmask != 0 { j ^ tmask } else { j };
                m[i][j] = c(1.0, 0.0);
            }
            m
        }
    }
}

/// Full unitary of a circuit: later gates multiply from the left.
pub fn circuit_unitary(circuit: &CircuitDescription) -> Matrix {
    let mut u = identity(1 << circuit.n_qubits());
    for gate in circuit.gates() {
        u = matmul(&gate_matrix(gate, circuit.n_qubits()), &u);
    }
    u
}

/// Apply the circuit's unitary to |0...0⟩: the first column.
pub fn circuit_on_zero(circuit: &CircuitDescription) -> Vec<Complex64> {
    circuit_unitary(circuit).iter().map(|row| row[0]).collect()
}
