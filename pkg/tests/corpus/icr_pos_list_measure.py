# expect: InsuffClasReg:3
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qc = QuantumCircuit(4, 2)
for q in range(4):
    qc.h(q)
qc.measure([0, 1, 2, 3], [0, 1, 0, 1])
