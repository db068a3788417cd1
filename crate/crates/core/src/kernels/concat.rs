use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor4};

/// Concatenates along the channel axis, `a`'s channels first.
pub fn concat_channels<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    if (sa.n, sa.h, sa.w) != (sb.n, sb.h, sb.w) {
        return Err(Error::shape("concat_channels", format!("matching n,h,w for {sa}"), sb.to_string()));
    }
    let s = Shape4::new(sa.n, sa.c + sb.c, sa.h, sa.w);
    let mut data = Vec::with_capacity(s.len());
    for n in 0..sa.n {
        data.extend_from_slice(a.item(n));
        data.extend_from_slice(b.item(n));
    }
    Tensor4::from_vec(s, data)
}

/// Inverse of [`concat_channels`]: splits at channel `at`.
pub fn split_channels<T: Scalar>(t: &Tensor4<T>, at: usize) -> Result<(Tensor4<T>, Tensor4<T>)> {
    let s = t.shape();
    if at == 0 || at >= s.c {
        return Err(Error::shape("split_channels", format!("split point in 1..{}", s.c), at.to_string()));
    }
    let sa = Shape4::new(s.n, at, s.h, s.w);
    let sb = Shape4::new(s.n, s.c - at, s.h, s.w);
    let cut = at * s.plane();
    let mut da = Vec::with_capacity(sa.len());
    let mut db = Vec::with_capacity(sb.len());
    for n in 0..s.n {
        let item = t.item(n);
        da.extend_from_slice(&item[..cut]);
        db.extend_from_slice(&item[cut..]);
    }
    Ok((Tensor4::from_vec(sa, da)?, Tensor4::from_vec(sb, db)?))
}
