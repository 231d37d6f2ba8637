//! Complex resource grids — the (subcarrier × OFDM symbol) sample planes that
//! carry transmit signals, receive signals, and channel responses.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dense complex grid over one slot: `n_sc` subcarriers by `n_sym` OFDM
/// symbols.
///
/// Storage is subcarrier-fastest: resource element `(k, l)` lives at vector
/// index `l * n_sc + k`. The channel-estimation operators rely on this
/// column-stacking convention, so it is part of the type's contract.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid<T> {
    n_sc: usize,
    n_sym: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ResourceGrid<T> {
    /// All-zero grid of the given shape.
    pub fn zeros(n_sc: usize, n_sym: usize) -> Self {
        ResourceGrid {
            n_sc,
            n_sym,
            data: vec![Complex::default(); n_sc * n_sym],
        }
    }

    /// Wrap an existing sample vector; `data` must hold `n_sc * n_sym`
    /// elements in subcarrier-fastest order.
    pub fn from_vec(n_sc: usize, n_sym: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != n_sc * n_sym {
            return Err(Error::Dimension(format!(
                "grid of {n_sc}x{n_sym} needs {} samples, got {}",
                n_sc * n_sym,
                data.len()
            )));
        }
        Ok(ResourceGrid { n_sc, n_sym, data })
    }

    /// Number of subcarriers (fast axis).
    pub fn n_sc(&self) -> usize {
        self.n_sc
    }

    /// Number of OFDM symbols (slow axis).
    pub fn n_sym(&self) -> usize {
        self.n_sym
    }

    /// Total number of resource elements.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the grid holds no resource elements.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Vectorized index of resource element `(sc, sym)` (subcarrier-fastest).
    #[inline]
    pub fn vec_index(&self, sc: usize, sym: usize) -> usize {
        debug_assert!(sc < self.n_sc && sym < self.n_sym);
        sym * self.n_sc + sc
    }

    /// Whole grid as a flat slice in storage order.
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    /// Whole grid as a mutable flat slice in storage order.
    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    /// The contiguous samples of one OFDM symbol.
    pub fn symbol(&self, sym: usize) -> &[Complex<T>] {
        let start = sym * self.n_sc;
        &self.data[start..start + self.n_sc]
    }

    /// Mutable samples of one OFDM symbol.
    pub fn symbol_mut(&mut self, sym: usize) -> &mut [Complex<T>] {
        let start = sym * self.n_sc;
        &mut self.data[start..start + self.n_sc]
    }

    /// Iterate `((sc, sym), value)` over all resource elements.
    pub fn iter_indexed(&self) -> impl Iterator<Item = ((usize, usize), &Complex<T>)> {
        let n_sc = self.n_sc;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i % n_sc, i / n_sc), v))
    }

    /// Error unless `other` has the same shape.
    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n_sc != other.n_sc || self.n_sym != other.n_sym {
            return Err(Error::GridShape {
                want_sc: self.n_sc,
                want_sym: self.n_sym,
                got_sc: other.n_sc,
                got_sym: other.n_sym,
            });
        }
        Ok(())
    }
}

impl<T: Scalar> Index<(usize, usize)> for ResourceGrid<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (sc, sym): (usize, usize)) -> &Complex<T> {
        &self.data[sym * self.n_sc + sc]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for ResourceGrid<T> {
    #[inline]
    fn index_mut(&mut self, (sc, sym): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[sym * self.n_sc + sc]
    }
}
