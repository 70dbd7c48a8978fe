//! Floating point scalar abstraction shared by the embedding trainer and the
//! classifier.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// A real number type the numerical code can be instantiated with.
///
/// Implemented for `f32` (the default for trained artifacts) and `f64`
/// (used by the gradient checks).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Element type for lock-free shared parameter storage.
    type Atomic: AtomicScalar<Self>;

    /// Width in bytes of the little-endian encoding.
    const BYTES: usize;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes a value from exactly `Self::BYTES` bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

/// Element-level atomic cell holding a scalar bit pattern.
///
/// Loads and stores are relaxed: concurrent writers may overwrite each
/// other's updates, but a reader never observes a torn value.
pub trait AtomicScalar<F>: Send + Sync {
    fn new(v: F) -> Self;
    fn load(&self) -> F;
    fn store(&self, v: F);
}

#[repr(transparent)]
pub struct AtomicF32(AtomicU32);

impl AtomicScalar<f32> for AtomicF32 {
    fn new(v: f32) -> Self {
        AtomicF32(AtomicU32::new(v.to_bits()))
    }

    #[inline]
    fn load(&self) -> f32 {
        f32::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(&self, v: f32) {
        self.0.store(v.to_bits(), Ordering::Relaxed)
    }
}

#[repr(transparent)]
pub struct AtomicF64(AtomicU64);

impl AtomicScalar<f64> for AtomicF64 {
    fn new(v: f64) -> Self {
        AtomicF64(AtomicU64::new(v.to_bits()))
    }

    #[inline]
    fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(&self, v: f64) {
        self.0.store(v.to_bits(), Ordering::Relaxed)
    }
}

impl Scalar for f32 {
    type Atomic = AtomicF32;
    const BYTES: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Scalar for f64 {
    type Atomic = AtomicF64;
    const BYTES: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

#[inline]
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Logistic function with the argument clamped to [-30, 30].
#[inline]
pub fn sigmoid<F: Scalar>(x: F) -> F {
    let bound = F::from_f64_lossy(30.0);
    let x = x.max(-bound).min(bound);
    F::one() / (F::one() + (-x).exp())
}
