use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Time-ordered signed-distance observations on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    grid: GridSpec,
    times: Vec<f64>,
    fields: Vec<ScalarField>,
}

impl ObservationSeries {
    /// `times` are hours since the start of the series and must be strictly
    /// increasing; every field must live on `grid`.
    pub fn new(grid: GridSpec, times: Vec<f64>, fields: Vec<ScalarField>) -> Result<Self> {
        grid.validate()?;
        if times.len() != fields.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries("non-finite timestamp".into()));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "timestamps not strictly increasing at index {}",
                k + 1
            )));
        }
        for (k, f) in fields.iter().enumerate() {
            f.grid().ensure_same(&grid, &format!("field {k}"))?;
        }
        Ok(ObservationSeries {
            grid,
            times,
            fields,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Interval lengths `times[k + 1] - times[k]`.
    pub fn deltas(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The first `n` observations.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidSeries(format!(
                "cannot keep {n} of {} observations",
                self.len()
            )));
        }
        ObservationSeries::new(
            self.grid,
            self.times[..n].to_vec(),
            self.fields[..n].to_vec(),
        )
    }

    /// A copy where the listed observations are fully masked out.
    pub fn with_held_out(&self, indices: &[usize]) -> Result<Self> {
        let mut fields = self.fields.clone();
        for &k in indices {
            let field = fields
                .get_mut(k)
                .ok_or_else(|| Error::InvalidSeries(format!("hold-out index {k} out of range")))?;
            *field = ScalarField::with_mask(
                self.grid,
                vec![0.0; self.grid.len()],
                vec![false; self.grid.len()],
            )?;
        }
        ObservationSeries::new(self.grid, self.times.clone(), fields)
    }

    pub fn map_fields(
        &self,
        mut f: impl FnMut(usize, &ScalarField) -> Result<ScalarField>,
    ) -> Result<Self> {
        let fields = self
            .fields
            .iter()
            .enumerate()
            .map(|(k, field)| f(k, field))
            .collect::<Result<Vec<_>>>()?;
        ObservationSeries::new(self.grid, self.times.clone(), fields)
    }
}
