//! Uniform periodic grids on `[0, 2π)²` and the sampled / analytic function
//! types that live on them.

use std::f64::consts::TAU;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform periodic grid over `[0, 2π)²`. Node `(i, j)` sits at
/// `(2πi/nx, 2πj/ny)`; the right and top edges are identified with 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodicGrid2D {
    nx: usize,
    ny: usize,
}

impl PeriodicGrid2D {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::GridTooSmall { nx, ny, min: 2 });
        }
        Ok(Self { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        TAU * i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        TAU * j as f64 / self.ny as f64
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    pub fn dx(&self) -> f64 {
        TAU / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        TAU / self.ny as f64
    }

    /// Same grid with the axes swapped.
    pub fn transposed(&self) -> Self {
        Self {
            nx: self.ny,
            ny: self.nx,
        }
    }

    /// Column index whose x-coordinate is closest to `x` (periodically).
    pub fn nearest_column(&self, x: f64) -> usize {
        let t = (x / self.dx()).round().rem_euclid(self.nx as f64);
        t as usize % self.nx
    }
}

/// Convenience constructor mirroring [`PeriodicGrid2D::new`].
pub fn make_grid(nx: usize, ny: usize) -> Result<PeriodicGrid2D> {
    PeriodicGrid2D::new(nx, ny)
}

/// Real samples on a [`PeriodicGrid2D`], stored row-major in `i` then `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    grid: PeriodicGrid2D,
    values: Vec<f64>,
}

impl GridFunction2D {
    pub fn new(grid: PeriodicGrid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                nx: grid.nx,
                ny: grid.ny,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (k / grid.ny, k % grid.ny);
            let (x, y) = grid.node(i, j);
            return Err(Error::NonFinite {
                i,
                j,
                x,
                y,
                value: values[k],
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PeriodicGrid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every node, failing on the first non-finite value.
    pub fn from_fn(grid: PeriodicGrid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let (x, y) = grid.node(i, j);
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j, x, y, value: v });
                }
                values.push(v);
            }
        }
        Ok(Self { grid, values })
    }

    /// Index-based construction; the closure must return finite values.
    pub(crate) fn from_index_fn(grid: PeriodicGrid2D, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> PeriodicGrid2D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny + j]
    }

    /// Column `i` (fixed x) as a slice over the y-nodes.
    pub fn column(&self, i: usize) -> &[f64] {
        let ny = self.grid.ny;
        &self.values[i * ny..(i + 1) * ny]
    }

    /// Row `j` (fixed y) collected over the x-nodes.
    pub fn row(&self, j: usize) -> Vec<f64> {
        (0..self.grid.nx).map(|i| self.get(i, j)).collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let t = self.grid.transposed();
        Self::from_index_fn(t, |i, j| self.get(j, i))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Discrete L2 distance `sqrt(dx·dy·Σ(a−b)²)`.
    pub fn l2_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (self.grid.dx() * self.grid.dy() * s).sqrt()
    }

    /// Largest |value| on the lines `x = 0` and `y = 0`.
    pub fn boundary_max(&self) -> f64 {
        let col0 = self.column(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.grid.nx).fold(col0, |m, i| m.max(self.get(i, 0).abs()))
    }

    /// Writes the `x,y,value` CSV dump, row-major in `i` then `j`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y", "value"])?;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let (x, y) = self.grid.node(i, j);
                wtr.write_record([fmt17(x), fmt17(y), fmt17(self.get(i, j))])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Parses a CSV dump produced by [`GridFunction2D::write_csv`]. Grid
    /// dimensions are inferred from the distinct coordinates.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "value"] {
            return Err(Error::InvalidArgument(format!(
                "expected header `x,y,value`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad number `{}`: {e}", &rec[k])))
            };
            rows.push((parse(0)?, parse(1)?, parse(2)?));
        }
        // ny = number of leading rows sharing the first x
        let first_x = rows
            .first()
            .map(|r| r.0)
            .ok_or_else(|| Error::InvalidArgument("empty grid csv".into()))?;
        let ny = rows.iter().take_while(|r| r.0 == first_x).count();
        if ny == 0 || rows.len() % ny != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} rows cannot form a rectangular grid",
                rows.len()
            )));
        }
        let nx = rows.len() / ny;
        let grid = PeriodicGrid2D::new(nx, ny)?;
        for (k, &(x, y, _)) in rows.iter().enumerate() {
            let (gx, gy) = grid.node(k / ny, k % ny);
            if (gx - x).abs() > 1e-9 || (gy - y).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "row {k}: node ({x}, {y}) is not on the {nx}x{ny} periodic grid"
                )));
            }
        }
        Self::new(grid, rows.into_iter().map(|r| r.2).collect())
    }
}

/// Formats with 17 significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Discrete surrogate of the L2 norm on `[0,2π]²`: `sqrt(dx·dy·Σ values²)`.
pub fn l2_norm(u: &GridFunction2D) -> f64 {
    let s: f64 = u.values.iter().map(|v| v * v).sum();
    (u.grid.dx() * u.grid.dy() * s).sqrt()
}

pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Which partial derivative of an [`AnalyticFunction2D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partial {
    X,
    Y,
    XX,
    YY,
    XY,
}

impl Partial {
    pub fn name(self) -> &'static str {
        match self {
            Partial::X => "d_x",
            Partial::Y => "d_y",
            Partial::XX => "d_xx",
            Partial::YY => "d_yy",
            Partial::XY => "d_xy",
        }
    }
}

/// An evaluable function of two variables with optional exact partials up
/// to order two.
#[derive(Clone)]
pub struct AnalyticFunction2D {
    eval: Field,
    d_x: Option<Field>,
    d_y: Option<Field>,
    d_xx: Option<Field>,
    d_yy: Option<Field>,
    d_xy: Option<Field>,
}

impl fmt::Debug for AnalyticFunction2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFunction2D")
            .field("d_x", &self.d_x.is_some())
            .field("d_y", &self.d_y.is_some())
            .field("d_xx", &self.d_xx.is_some())
            .field("d_yy", &self.d_yy.is_some())
            .field("d_xy", &self.d_xy.is_some())
            .finish()
    }
}

impl AnalyticFunction2D {
    pub fn new(eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            d_x: None,
            d_y: None,
            d_xx: None,
            d_yy: None,
            d_xy: None,
        }
    }

    pub fn with(mut self, which: Partial, d: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        let d: Field = Arc::new(d);
        match which {
            Partial::X => self.d_x = Some(d),
            Partial::Y => self.d_y = Some(d),
            Partial::XX => self.d_xx = Some(d),
            Partial::YY => self.d_yy = Some(d),
            Partial::XY => self.d_xy = Some(d),
        }
        self
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    pub fn field(&self) -> &Field {
        &self.eval
    }

    pub fn partial(&self, which: Partial) -> Option<&Field> {
        match which {
            Partial::X => self.d_x.as_ref(),
            Partial::Y => self.d_y.as_ref(),
            Partial::XX => self.d_xx.as_ref(),
            Partial::YY => self.d_yy.as_ref(),
            Partial::XY => self.d_xy.as_ref(),
        }
    }

    pub fn require(&self, which: Partial) -> Result<&Field> {
        self.partial(which).ok_or(Error::MissingDerivative(which.name()))
    }

    /// `g(x, y) = f(y, x)` with the partials relabelled accordingly.
    pub fn swap_xy(&self) -> Self {
        let swap = |f: &Option<Field>| -> Option<Field> {
            f.as_ref().map(|f| {
                let f = Arc::clone(f);
                Arc::new(move |x: f64, y: f64| f(y, x)) as Field
            })
        };
        let e = Arc::clone(&self.eval);
        Self {
            eval: Arc::new(move |x, y| e(y, x)),
            d_x: swap(&self.d_y),
            d_y: swap(&self.d_x),
            d_xx: swap(&self.d_yy),
            d_yy: swap(&self.d_xx),
            d_xy: swap(&self.d_xy),
        }
    }

    /// Largest discrepancy between each supplied partial and a central
    /// difference of `eval` with step `h`, over the given points.
    pub fn fd_discrepancy(&self, points: &[(f64, f64)], h: f64) -> f64 {
        let f = &self.eval;
        let mut worst = 0.0f64;
        for &(x, y) in points {
            let fd = |w: Partial| -> f64 {
                match w {
                    Partial::X => (f(x + h, y) - f(x - h, y)) / (2.0 * h),
                    Partial::Y => (f(x, y + h) - f(x, y - h)) / (2.0 * h),
                    Partial::XX => (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h),
                    Partial::YY => (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h),
                    Partial::XY => {
                        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h))
                            / (4.0 * h * h)
                    }
                }
            };
            for w in [Partial::X, Partial::Y, Partial::XX, Partial::YY, Partial::XY] {
                if let Some(d) = self.partial(w) {
                    worst = worst.max((d(x, y) - fd(w)).abs());
                }
            }
        }
        worst
    }
}

/// Samples `f.eval` on every node of `grid`.
pub fn sample(f: &AnalyticFunction2D, grid: PeriodicGrid2D) -> Result<GridFunction2D> {
    GridFunction2D::from_fn(grid, |x, y| f.eval(x, y))
}

/// Samples an arbitrary field (e.g. a partial derivative) on `grid`.
pub fn sample_field(f: &Field, grid: PeriodicGrid2D) -> Result<GridFunction2D> {
    GridFunction2D::from_fn(grid, |x, y| f(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_small_dims() {
        assert!(make_grid(1, 4).is_err());
        assert!(make_grid(4, 1).is_err());
        assert!(make_grid(2, 2).is_ok());
    }

    #[test]
    fn node_coordinates() {
        let g = make_grid(2, 2).unwrap();
        assert_eq!(g.node(0, 0), (0.0, 0.0));
        assert_eq!(g.node(1, 1), (PI, PI));
        let g = make_grid(4, 4).unwrap();
        assert_eq!(g.node(1, 3), (PI / 2.0, 3.0 * PI / 2.0));
        let g = make_grid(64, 64).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.dx(), 2.0 * PI / 64.0);
        assert_eq!(g.dy(), 2.0 * PI / 64.0);
    }

    #[test]
    fn sample_examples() {
        let g = make_grid(3, 5).unwrap();
        let z = sample(&AnalyticFunction2D::new(|_, _| 0.0), g).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let g = make_grid(2, 2).unwrap();
        let one = sample(&AnalyticFunction2D::new(|_, _| 1.0), g).unwrap();
        assert_eq!(one.values(), &[1.0; 4]);

        let g = make_grid(4, 2).unwrap();
        let s = sample(&AnalyticFunction2D::new(|x, _| x.sin()), g).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0];
        for i in 0..4 {
            for j in 0..2 {
                assert!((s.get(i, j) - expect[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sample_names_non_finite_node() {
        let g = make_grid(4, 4).unwrap();
        let f = AnalyticFunction2D::new(|x, y| if x > 3.0 && y > 1.0 { f64::NAN } else { 0.0 });
        match sample(&f, g) {
            Err(Error::NonFinite { i, j, .. }) => assert_eq!((i, j), (2, 1)),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn l2_norm_examples() {
        let g = make_grid(64, 64).unwrap();
        assert_eq!(l2_norm(&GridFunction2D::zeros(g)), 0.0);
        let one = sample(&AnalyticFunction2D::new(|_, _| 1.0), g).unwrap();
        assert!((l2_norm(&one) - 2.0 * PI).abs() < 1e-12);
        let s = sample(&AnalyticFunction2D::new(|x, _| x.sin()), g).unwrap();
        assert!((l2_norm(&s) - 2f64.sqrt() * PI).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = make_grid(5, 3).unwrap();
        let u = sample(&AnalyticFunction2D::new(|x, y| x.sin() * (2.0 * y).cos() + 0.1), g).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), 16);
        let back = GridFunction2D::read_csv(&buf[..]).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn read_csv_rejects_off_grid_nodes() {
        let text = "x,y,value\n0,0,1\n0,3,1\n1,0,1\n1,3,1\n";
        assert!(GridFunction2D::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn exact_derivatives_agree_with_fd() {
        let f = AnalyticFunction2D::new(|x, y| x.sin() * (2.0 * y).cos())
            .with(Partial::X, |x, y| x.cos() * (2.0 * y).cos())
            .with(Partial::XX, |x, y| -x.sin() * (2.0 * y).cos())
            .with(Partial::XY, |x, y| -2.0 * x.cos() * (2.0 * y).sin());
        let pts = [(0.3, 1.1), (2.0, 4.0), (5.5, 0.2)];
        let d1 = f.fd_discrepancy(&pts, 1e-3);
        let d2 = f.fd_discrepancy(&pts, 5e-4);
        assert!(d1 < 1e-5);
        assert!(d1 / d2 > 3.0);
    }

    #[test]
    fn swap_relabels_partials() {
        let f = AnalyticFunction2D::new(|x, y| x * y * y).with(Partial::Y, |x, y| 2.0 * x * y);
        let g = f.swap_xy();
        assert_eq!(g.eval(2.0, 3.0), 3.0 * 4.0);
        assert_eq!(g.require(Partial::X).unwrap()(2.0, 3.0), 2.0 * 3.0 * 2.0);
        assert!(g.partial(Partial::Y).is_none());
    }
}
