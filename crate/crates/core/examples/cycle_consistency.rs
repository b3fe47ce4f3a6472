//! Checks cycle consistency of two small collections and recovers the
//! universe labelling when it exists.

use matchlift::mapcore::{factorize_consistent, BlockMapMatrix, PartialMapBlock};
use matchlift::Error;

fn main() -> matchlift::Result<()> {
    // three objects with two points each; 0 -> 1 -> 2 composes to 0 -> 2
    let swap = PartialMapBlock::binary(2, 2, [(0, 1), (1, 0)])?;
    let id = PartialMapBlock::identity(2);
    let good = BlockMapMatrix::assemble(vec![2, 2, 2], [((0, 1), swap.clone()), ((1, 2), id.clone()), ((0, 2), swap)])?;
    let y = factorize_consistent(&good)?;
    println!("consistent, labels per object: {:?}", y.labels());
    println!("universe size: {}", y.universe().m);

    // break the cycle: 0 -> 2 disagrees with the composition
    let bad = BlockMapMatrix::assemble(
        vec![2, 2, 2],
        [((0, 1), PartialMapBlock::binary(2, 2, [(0, 1), (1, 0)])?), ((1, 2), id.clone()), ((0, 2), id)],
    )?;
    match factorize_consistent(&bad) {
        Err(Error::Inconsistent(w)) => println!("inconsistent: objects {:?}, rows {:?}", w.objects, w.rows),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
