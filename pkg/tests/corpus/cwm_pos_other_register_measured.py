# expect: CondWoMeas:9
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qr = QuantumRegister(2)
c0 = ClassicalRegister(1)
c1 = ClassicalRegister(1)
qc = QuantumCircuit(qr, c0, c1)
qc.h(0)
qc.measure(0, c0[0])
qc.x(1).c_if(c1, 1)
qc.measure(1, c1[0])
