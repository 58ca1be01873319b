# expect: DoubleMeas:7
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qc = QuantumCircuit(1, 2)
qc.h(0)
qc.measure(0, 0)
qc.barrier()
qc.measure(0, 1)
