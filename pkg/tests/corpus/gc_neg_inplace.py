# expect: none
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
a = QuantumCircuit(2)
a.h(0)
a.cx(0, 1)
b = QuantumCircuit(2)
b.x(0)
b.compose(a, inplace=True)
