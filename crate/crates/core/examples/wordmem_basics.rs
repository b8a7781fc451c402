//! The word machine: heap blocks, closures as addresses, and simulated
//! libraries with checked arity.

use mlidl::wordmem::{word_fn, Convention, Fault, Machine};

fn main() -> Result<(), Fault> {
    let mut m = Machine::new();

    let a = m.alloc_words(&[1, 2, 3])?;
    m.store_word(Machine::offset(a, 1), 20)?;
    println!("block at {a}: {:?}", m.read(a, 3)?);

    let add = word_fn(|_, args| Ok(args.iter().sum()));
    let f = m.fun_to_addr(&add);
    println!("closure at {f}; call -> {}", m.call(f, &[40, 2])?);

    let lib = m.define_library("math.dll");
    m.define_symbol(&lib, "Add2", Convention::Pascal, 2, add);
    let add2 = m.get_function(&m.open_library("math.dll")?, "Add2")?;
    println!("Add2(5, 6) = {}", m.call(add2, &[5, 6])?);
    println!("Add2(5) -> {}", m.call(add2, &[5]).unwrap_err());

    m.free(a)?;
    println!("after free: {}", m.read_word(a).unwrap_err());
    println!("twice: {}", m.free(a).unwrap_err());
    Ok(())
}
