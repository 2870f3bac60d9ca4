"""Finite-volume Lindblad generators for qudit and fermion lattices with ergodicity certificates."""
from .operators import LocalOperator, Region
from .single_site import SingleSiteGenerator, SpectralData, spectral_decompose
from .model import InteractionTerm, ModelSpec, assemble
from .locality import CertificateReport, certify, seminorm
from .fermions import FermionModelSpec, build_car, fermion_certificate
from .catalog import model_fermion_hopping, model_spin_dissipative, model_xyz

__version__ = "0.1.0"

__all__ = ["LocalOperator", "Region", "SingleSiteGenerator", "SpectralData", "spectral_decompose",
           "InteractionTerm", "ModelSpec", "assemble", "CertificateReport", "certify", "seminorm",
           "FermionModelSpec", "build_car", "fermion_certificate", "model_xyz",
           "model_spin_dissipative", "model_fermion_hopping"]
