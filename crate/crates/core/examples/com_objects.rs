//! The Bar component: class registration, creation, QueryInterface
//! between its two interfaces, and destruction at refcount zero.

use std::error::Error;

use mlidl::com::{bar, call_method, clsid_of, iid_of, query_interface, release, Com, Iid, Registry};
use mlidl::wordmem::Machine;

fn main() -> Result<(), Box<dyn Error>> {
    let desc = bar::binding();
    let log = bar::Log::default();
    let mut reg = Registry::new(Com::new());
    reg.register_class_object(bar::factory(desc.clone(), log.clone()))?;
    print!("{}", reg.dump());

    let mut m = Machine::new();
    let com = reg.com().clone();
    let ix = reg.create_instance(&mut m, clsid_of(&desc, "Bar")?, &iid_of(&desc, "IX")?)?;
    call_method(&mut m, &desc, &ix, "FooX", &[])?;
    let iy = query_interface(&mut m, &ix, &iid_of(&desc, "IY")?)?;
    call_method(&mut m, &desc, &iy, "FooY", &[])?;

    let u1 = query_interface(&mut m, &ix, &Iid::iunknown())?;
    let u2 = query_interface(&mut m, &iy, &Iid::iunknown())?;
    println!("same identity: {}", u1.addr == u2.addr);
    println!("refcount: {:?}", com.refcount(ix.owner));

    for r in [u2, u1, iy, ix.clone()] {
        println!("release -> {}", release(&mut m, &r)?);
    }
    println!(
        "alive: {}, live blocks: {}",
        com.is_alive(ix.owner),
        m.live_allocations()
    );
    for line in log.borrow().iter() {
        println!("{line}");
    }
    Ok(())
}
