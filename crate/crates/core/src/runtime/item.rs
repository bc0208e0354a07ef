//! Stream item kinds and the typed storage behind every edge buffer.

use num_complex::Complex32;
use serde::{Deserialize, Serialize};
use std::fmt;

/// The kind of item carried by a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Complex32,
    Real32,
    Int32,
    Byte,
    /// A fixed-arity vector of `Complex32`. One vector counts as one item.
    ComplexVector(usize),
}

impl ItemKind {
    /// Scalars per item (vector arity for vectors, 1 otherwise).
    pub fn width(self) -> usize {
        match self {
            ItemKind::ComplexVector(n) => n,
            _ => 1,
        }
    }

    pub fn item_bytes(self) -> usize {
        match self {
            ItemKind::Complex32 => 8,
            ItemKind::Real32 | ItemKind::Int32 => 4,
            ItemKind::Byte => 1,
            ItemKind::ComplexVector(n) => 8 * n,
        }
    }

    pub(crate) fn scalar(self) -> ScalarKind {
        match self {
            ItemKind::Complex32 | ItemKind::ComplexVector(_) => ScalarKind::Complex,
            ItemKind::Real32 => ScalarKind::Real,
            ItemKind::Int32 => ScalarKind::Int,
            ItemKind::Byte => ScalarKind::Byte,
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ItemKind::Complex32 => write!(f, "complex32"),
            ItemKind::Real32 => write!(f, "real32"),
            ItemKind::Int32 => write!(f, "int32"),
            ItemKind::Byte => write!(f, "byte"),
            ItemKind::ComplexVector(n) => write!(f, "complex32[{n}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ScalarKind {
    Complex,
    Real,
    Int,
    Byte,
}

/// Flat scalar storage. Vector items are stored as `width` consecutive scalars.
#[derive(Debug, Clone)]
pub(crate) enum Storage {
    Complex(Vec<Complex32>),
    Real(Vec<f32>),
    Int(Vec<i32>),
    Byte(Vec<u8>),
}

impl Storage {
    pub(crate) fn new(kind: ScalarKind, len: usize) -> Self {
        match kind {
            ScalarKind::Complex => Storage::Complex(vec![Complex32::new(0.0, 0.0); len]),
            ScalarKind::Real => Storage::Real(vec![0.0; len]),
            ScalarKind::Int => Storage::Int(vec![0; len]),
            ScalarKind::Byte => Storage::Byte(vec![0; len]),
        }
    }

    pub(crate) fn copy_within(&mut self, src: std::ops::Range<usize>, dst: usize) {
        match self {
            Storage::Complex(v) => v.copy_within(src, dst),
            Storage::Real(v) => v.copy_within(src, dst),
            Storage::Int(v) => v.copy_within(src, dst),
            Storage::Byte(v) => v.copy_within(src, dst),
        }
    }

    pub(crate) fn view(&self, range: std::ops::Range<usize>) -> View<'_> {
        match self {
            Storage::Complex(v) => View::Complex(&v[range]),
            Storage::Real(v) => View::Real(&v[range]),
            Storage::Int(v) => View::Int(&v[range]),
            Storage::Byte(v) => View::Byte(&v[range]),
        }
    }

    pub(crate) fn view_mut(&mut self, range: std::ops::Range<usize>) -> ViewMut<'_> {
        match self {
            Storage::Complex(v) => ViewMut::Complex(&mut v[range]),
            Storage::Real(v) => ViewMut::Real(&mut v[range]),
            Storage::Int(v) => ViewMut::Int(&mut v[range]),
            Storage::Byte(v) => ViewMut::Byte(&mut v[range]),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum View<'a> {
    Complex(&'a [Complex32]),
    Real(&'a [f32]),
    Int(&'a [i32]),
    Byte(&'a [u8]),
}

#[derive(Debug)]
pub enum ViewMut<'a> {
    Complex(&'a mut [Complex32]),
    Real(&'a mut [f32]),
    Int(&'a mut [i32]),
    Byte(&'a mut [u8]),
}

/// Scalar types that can be pulled out of an edge buffer.
pub trait Item: Copy + Send + Sync + 'static {
    const KIND: ItemKind;
    fn from_view(view: View<'_>) -> Option<&[Self]>;
    fn from_view_mut(view: ViewMut<'_>) -> Option<&mut [Self]>;
}

macro_rules! impl_item {
    ($ty:ty, $variant:ident, $kind:expr) => {
        impl Item for $ty {
            const KIND: ItemKind = $kind;
            fn from_view(view: View<'_>) -> Option<&[Self]> {
                match view {
                    View::$variant(s) => Some(s),
                    _ => None,
                }
            }
            fn from_view_mut(view: ViewMut<'_>) -> Option<&mut [Self]> {
                match view {
                    ViewMut::$variant(s) => Some(s),
                    _ => None,
                }
            }
        }
    };
}

impl_item!(Complex32, Complex, ItemKind::Complex32);
impl_item!(f32, Real, ItemKind::Real32);
impl_item!(i32, Int, ItemKind::Int32);
impl_item!(u8, Byte, ItemKind::Byte);
