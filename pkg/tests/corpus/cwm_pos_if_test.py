# expect: CondWoMeas:8
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile
qr = QuantumRegister(1)
cr = ClassicalRegister(1)
qc = QuantumCircuit(qr, cr)
qc.h(0)
with qc.if_test((cr, 1)):
    qc.x(0)
qc.measure(0, 0)
