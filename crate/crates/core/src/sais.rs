//! Suffix array construction by induced sorting (SA-IS), generic over the
//! index width so that blocks below 2^31 bytes use 32-bit arrays.

/// Integer type used to store suffix array entries.
pub trait SaIndex: Copy + Eq + Ord + Send + Sync + std::fmt::Debug + 'static {
    const BITS: u32;
    const NONE: Self;
    fn from_usize(v: usize) -> Self;
    fn to_usize(self) -> usize;
}

impl SaIndex for u32 {
    const BITS: u32 = 32;
    const NONE: Self = u32::MAX;
    #[inline(always)]
    fn from_usize(v: usize) -> Self {
        debug_assert!(v <= u32::MAX as usize);
        v as u32
    }
    #[inline(always)]
    fn to_usize(self) -> usize {
        self as usize
    }
}

impl SaIndex for u64 {
    const BITS: u32 = 64;
    const NONE: Self = u64::MAX;
    #[inline(always)]
    fn from_usize(v: usize) -> Self {
        v as u64
    }
    #[inline(always)]
    fn to_usize(self) -> usize {
        self as usize
    }
}

/// Symbol type of the text being sorted.
pub trait Symbol: Copy + Eq + Ord + Sync {
    fn rank(self) -> usize;
}

macro_rules! impl_symbol {
    ($($t:ty),*) => {$(
        impl Symbol for $t {
            #[inline(always)]
            fn rank(self) -> usize {
                self as usize
            }
        }
    )*};
}

impl_symbol!(u8, u32, u64);

/// Suffix array of a byte string (shorter suffix sorts first on a tie).
pub fn suffix_array<I: SaIndex + Symbol>(text: &[u8]) -> Vec<I> {
    sa_is::<I, u8>(text, 255)
}

fn sa_naive<I: SaIndex, S: Symbol>(s: &[S]) -> Vec<I> {
    let mut sa: Vec<usize> = (0..s.len()).collect();
    sa.sort_by(|&a, &b| s[a..].cmp(&s[b..]));
    sa.into_iter().map(I::from_usize).collect()
}

fn sa_is<I: SaIndex + Symbol, S: Symbol>(s: &[S], upper: usize) -> Vec<I> {
    let n = s.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![I::from_usize(0)],
        2 => {
            return if s[0] < s[1] {
                vec![I::from_usize(0), I::from_usize(1)]
            } else {
                vec![I::from_usize(1), I::from_usize(0)]
            }
        }
        _ if n < 10 => return sa_naive(s),
        _ => {}
    }

    let mut sa = vec![I::NONE; n];
    // ls[i]: suffix i is S-type
    let mut ls = vec![false; n];
    for i in (0..n - 1).rev() {
        ls[i] = if s[i] == s[i + 1] { ls[i + 1] } else { s[i] < s[i + 1] };
    }
    let mut sum_l = vec![0usize; upper + 2];
    let mut sum_s = vec![0usize; upper + 2];
    for i in 0..n {
        if !ls[i] {
            sum_s[s[i].rank()] += 1;
        } else {
            sum_l[s[i].rank() + 1] += 1;
        }
    }
    for i in 0..=upper {
        sum_s[i] += sum_l[i];
        if i < upper {
            sum_l[i + 1] += sum_s[i];
        }
    }

    let induce = |sa: &mut [I], lms: &[usize]| {
        sa.fill(I::NONE);
        let mut buf = sum_s.clone();
        for &d in lms {
            if d == n {
                continue;
            }
            let c = s[d].rank();
            sa[buf[c]] = I::from_usize(d);
            buf[c] += 1;
        }
        buf.copy_from_slice(&sum_l);
        let c = s[n - 1].rank();
        sa[buf[c]] = I::from_usize(n - 1);
        buf[c] += 1;
        for i in 0..n {
            let v = sa[i];
            if v != I::NONE {
                let v = v.to_usize();
                if v >= 1 && !ls[v - 1] {
                    let c = s[v - 1].rank();
                    sa[buf[c]] = I::from_usize(v - 1);
                    buf[c] += 1;
                }
            }
        }
        buf.copy_from_slice(&sum_l);
        for i in (0..n).rev() {
            let v = sa[i];
            if v != I::NONE {
                let v = v.to_usize();
                if v >= 1 && ls[v - 1] {
                    let c = s[v - 1].rank() + 1;
                    buf[c] -= 1;
                    sa[buf[c]] = I::from_usize(v - 1);
                }
            }
        }
    };

    let mut lms_map = vec![I::NONE; n + 1];
    let mut lms = Vec::new();
    for i in 1..n {
        if !ls[i - 1] && ls[i] {
            lms_map[i] = I::from_usize(lms.len());
            lms.push(i);
        }
    }
    let m = lms.len();

    induce(&mut sa, &lms);

    if m > 0 {
        let mut sorted_lms = Vec::with_capacity(m);
        for &v in &sa {
            let v = v.to_usize();
            if lms_map[v] != I::NONE {
                sorted_lms.push(v);
            }
        }
        let mut rec_s = vec![I::from_usize(0); m];
        let mut rec_upper = 0usize;
        rec_s[lms_map[sorted_lms[0]].to_usize()] = I::from_usize(0);
        for i in 1..m {
            let (mut l, mut r) = (sorted_lms[i - 1], sorted_lms[i]);
            let next = |p: usize| {
                let k = lms_map[p].to_usize() + 1;
                if k < m { lms[k] } else { n }
            };
            let end_l = next(l);
            let end_r = next(r);
            let mut same = true;
            if end_l - l != end_r - r {
                same = false;
            } else {
                while l < end_l {
                    if s[l] != s[r] {
                        break;
                    }
                    l += 1;
                    r += 1;
                }
                if l == n || s[l] != s[r] {
                    same = false;
                }
            }
            if !same {
                rec_upper += 1;
            }
            rec_s[lms_map[sorted_lms[i]].to_usize()] = I::from_usize(rec_upper);
        }
        drop(lms_map);

        let rec_sa = sa_is::<I, I>(&rec_s, rec_upper);
        for i in 0..m {
            sorted_lms[i] = lms[rec_sa[i].to_usize()];
        }
        induce(&mut sa, &sorted_lms);
    }
    sa
}
