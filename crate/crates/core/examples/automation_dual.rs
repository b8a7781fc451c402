//! The Counter component's dual interface called both ways: through its
//! vtable and through IDispatch::Invoke with VARIANT arguments.

use std::error::Error;

use mlidl::automation::{counter, get_ids_of_names, invoke_by_name, Variant};
use mlidl::com::{call_method, clsid_of, iid_of, Com, Registry};
use mlidl::marshal::Value;
use mlidl::wordmem::Machine;

fn main() -> Result<(), Box<dyn Error>> {
    let desc = counter::binding();
    let log = counter::Log::default();
    let mut reg = Registry::new(Com::new());
    reg.register_class_object(counter::factory(desc.clone(), log.clone()))?;
    let mut m = Machine::new();
    let d = reg.create_instance(&mut m, clsid_of(&desc, "Counter")?, &iid_of(&desc, "ICounter")?)?;

    for name in ["Add", "Total", "Parity", "Measure", "Scale"] {
        println!("{name} has DISPID {}", get_ids_of_names(&mut m, &d, name)?);
    }

    invoke_by_name(&mut m, &d, "add", &[Variant::I4(40)])?;
    call_method(&mut m, &desc, &d, "Add", &[Value::Int(2)])?;
    println!("Total via Invoke: {}", invoke_by_name(&mut m, &d, "Total", &[])?);
    println!("Total via vtable: {:?}", call_method(&mut m, &desc, &d, "Total", &[])?);
    println!(
        "Measure \"héllo\": {}",
        invoke_by_name(&mut m, &d, "Measure", &[Variant::Bstr("héllo".into())])?
    );

    let e = invoke_by_name(&mut m, &d, "Add", &[Variant::Bstr("1".into())]).unwrap_err();
    println!("Add(\"1\") -> {e} (0x{:08X})", e.hresult());
    let e = invoke_by_name(&mut m, &d, "Total", &[Variant::I4(1)]).unwrap_err();
    println!("Total(1) -> {e} (0x{:08X})", e.hresult());
    println!("log: {:?}", log.borrow());
    Ok(())
}
