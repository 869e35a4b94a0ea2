//! Dense square arrays of rank 2, 3 and 4 with tuple indexing.

use std::ops::{Index, IndexMut};

macro_rules! dense {
    ($name:ident, $rank:literal, ($($i:ident),+)) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name<E> {
            n: usize,
            data: Vec<E>,
        }

        impl<E: Clone> $name<E> {
            pub fn filled(n: usize, e: E) -> Self {
                $name { n, data: vec![e; n.pow($rank)] }
            }
        }

        impl<E> $name<E> {
            pub fn from_fn(n: usize, mut f: impl FnMut($(dense!(@ty $i)),+) -> E) -> Self {
                let mut data = Vec::with_capacity(n.pow($rank));
                dense!(@loop n, data, f, [], $($i),+);
                $name { n, data }
            }

            pub fn n(&self) -> usize {
                self.n
            }

            pub fn iter(&self) -> std::slice::Iter<'_, E> {
                self.data.iter()
            }

            pub fn map<F>(&self, f: impl Fn(&E) -> F) -> $name<F> {
                $name { n: self.n, data: self.data.iter().map(f).collect() }
            }

            #[inline]
            fn offset(&self, ($($i),+): ($(dense!(@ty $i)),+)) -> usize {
                let mut o = 0;
                $( debug_assert!($i < self.n); o = o * self.n + $i; )+
                o
            }
        }

        impl<E> Index<($(dense!(@ty $i)),+)> for $name<E> {
            type Output = E;
            #[inline]
            fn index(&self, idx: ($(dense!(@ty $i)),+)) -> &E {
                &self.data[self.offset(idx)]
            }
        }

        impl<E> IndexMut<($(dense!(@ty $i)),+)> for $name<E> {
            #[inline]
            fn index_mut(&mut self, idx: ($(dense!(@ty $i)),+)) -> &mut E {
                let o = self.offset(idx);
                &mut self.data[o]
            }
        }
    };
    (@loop $n:ident, $data:ident, $f:ident, [$($done:ident),*], $head:ident $(, $rest:ident)*) => {
        for $head in 0..$n {
            dense!(@loop $n, $data, $f, [$($done,)* $head], $($rest),*);
        }
    };
    (@ty $i:ident) => {
        usize
    };
    (@loop $n:ident, $data:ident, $f:ident, [$($done:ident),*],) => {
        $data.push($f($($done),*));
    };
}

dense!(Mat, 2, (a, b));
dense!(Tensor3, 3, (a, b, c));
dense!(Tensor4, 4, (a, b, c, d));

impl<T: num_traits::Float> Mat<T> {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// The bilinear form `uᵀ A v`.
    pub fn form(&self, u: &[T], v: &[T]) -> T {
        let av = self.mul_vec(v);
        u.iter().zip(&av).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
    }
}

/// Largest absolute value of any entry, as `f64`.
pub fn sup_norm<'a, T: crate::Scalar>(it: impl IntoIterator<Item = &'a T>) -> f64 {
    it.into_iter().fold(0.0, |m, x| m.max(x.as_f64().abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = Tensor3::from_fn(3, |i, j, k| 100 * i + 10 * j + k);
        assert_eq!(t[(2, 0, 1)], 201);
        let mut m = Mat::filled(2, 0.0);
        m[(1, 0)] = 3.0;
        assert_eq!(m.iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 3.0, 0.0]);
        let r = Tensor4::from_fn(2, |a, b, c, d| a + b + c + d);
        assert_eq!(r[(1, 1, 1, 0)], 3);
    }
}
