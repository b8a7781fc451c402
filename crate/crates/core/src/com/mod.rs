//! The component object model over word memory: identities, vtables,
//! reference counting, class factories and activation.

pub mod bar;
mod client;
mod guid;
mod object;
mod registry;

pub use client::{call_method, clsid_of, iid_of, implement, method_impl, skeletons, MethodImpl};
pub use guid::{Guid, GuidParseError, IID_IDISPATCH, IID_IUNKNOWN};
pub use object::{
    add_ref, call_slot, failed, get_method, query_interface, release, Clsid, Com, ComError, Hresult, Iid, InterfaceRef,
    ObjectId, E_FAIL, E_NOINTERFACE, E_NOTIMPL, E_POINTER, IUNKNOWN_SLOTS, REGDB_E_CLASSNOTREG, S_OK,
};
pub use registry::{BuildFn, ClassFactory, Registry};

#[cfg(test)]
mod tests;
