use crate::lexicon::{BoxRange, Lexicon};

use super::HarnessError;

/// Splits the collation-sorted lexicon into `k` contiguous boxes whose sizes
/// differ by at most one, larger boxes first.
pub fn make_boxes(lexicon: &Lexicon, k: usize) -> Result<Vec<BoxRange>, HarnessError> {
    let n = lexicon.len();
    if n == 0 {
        return Err(HarnessError::Data(
            "cannot partition an empty lexicon".into(),
        ));
    }
    if k == 0 || k > n {
        return Err(HarnessError::Usage(format!(
            "box count {k} out of range 1..={n}"
        )));
    }
    let words = lexicon.words();
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    let mut boxes = Vec::with_capacity(k);
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let span = &words[start..start + size];
        boxes.push(BoxRange::new(
            format!("box{:04}", i + 1),
            span[0].clone(),
            span[size - 1].clone(),
        ));
        start += size;
    }
    Ok(boxes)
}
