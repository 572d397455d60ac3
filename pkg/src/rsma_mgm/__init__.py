"""Link-level simulation of RSMA, SDMA and NOMA multi-group multicast."""

__version__ = "0.1.0"
