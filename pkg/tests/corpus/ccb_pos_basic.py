# expect: ConstClasBit:6
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qc = QuantumCircuit(2, 2)
qc.h(0)
qc.measure(0, 0)
qc.measure(1, 1)
