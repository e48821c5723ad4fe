//! The linear algebra underneath the steppers: Thomas elimination for the
//! tridiagonal B, banded LU for the coupled system, dense pivoting as a check.

use gk_heat::linalg::{dense_solve, thomas_solve, BandedMatrix, TridiagonalMatrix};

fn main() -> gk_heat::Result<()> {
    // B = I - c_B L for c_B = 0.1
    let l = TridiagonalMatrix::constant(6, 1.0, -2.0, 1.0);
    let b = l.shifted_scaled(1.0, -0.1);
    let rhs = vec![1.0; 6];
    let x = thomas_solve(&b, &rhs)?;
    let y = dense_solve(&b.to_dense(), &rhs)?;
    println!("thomas {:.6?}", x);
    println!("dense  {:.6?}", y);

    // pentadiagonal, diagonally weighted
    let n = 7;
    let mut a = BandedMatrix::zeros(n, 2);
    for i in 0..n {
        a.set(i, i, 6.0);
        for (off, v) in [(1, -1.0), (2, 0.5)] {
            if i + off < n {
                a.set(i, i + off, v);
                a.set(i + off, i, -v);
            }
        }
    }
    let lu = a.factor()?;
    let rhs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let banded = lu.solve(&rhs)?;
    let dense = dense_solve(&a.to_dense(), &rhs)?;
    let diff = banded.iter().zip(&dense).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
    println!("banded LU vs dense: max difference {diff:.2e}");

    let singular = TridiagonalMatrix::constant(3, 1.0, 0.0, 1.0);
    println!("{}", thomas_solve(&singular, &[1.0, 1.0, 1.0]).unwrap_err());
    Ok(())
}
