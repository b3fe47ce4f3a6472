//! Writes an instance to the text format and reads it back.

use matchlift::io::{parse_instance, write_instance, InstanceFile};
use matchlift::mapcore::SymmetryPolicy;
use matchlift::synth::{generate, ModelParams};

fn main() -> matchlift::Result<()> {
    let inst = generate(&ModelParams {
        m: 3,
        n: 4,
        p_set: 0.8,
        p_obs: 0.7,
        p_true: 0.8,
        seed: 2,
    })?;
    let text = write_instance(&InstanceFile::from_instance(&inst));
    print!("{text}");
    let back = parse_instance("example", &text, SymmetryPolicy::Reject)?;
    assert_eq!(back.maps, inst.x_in);
    assert_eq!(write_instance(&back), text);
    println!("# round trip ok");
    Ok(())
}
