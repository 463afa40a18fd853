"""Minimal JVM class-file assembler used to produce the committed test fixtures.

Only what the fixtures need: a constant pool with all entry kinds, methods with
Code attributes assembled from mnemonics (labels, switches, `wide`), fields,
and a handful of class attributes. No verification is attempted.
"""

import struct

# mnemonic -> (opcode, operand format)
#   ''      no operands
#   'b'     signed byte            'B'   unsigned byte (local index / atype)
#   's'     signed short           'c1'  u1 constant-pool index
#   'c2'    u2 constant-pool index 'br'  s2 branch label   'brw' s4 branch label
#   'iinc'  (u1 local, s1 delta)   'itf' invokeinterface   'indy' invokedynamic
#   'multi' (u2 cp index, u1 dims) 'tswitch' / 'lswitch'
OPCODES = {}


def _op(code, name, fmt=''):
    OPCODES[name] = (code, fmt)


for i, n in enumerate(['nop', 'aconst_null', 'iconst_m1', 'iconst_0', 'iconst_1', 'iconst_2',
                       'iconst_3', 'iconst_4', 'iconst_5', 'lconst_0', 'lconst_1', 'fconst_0',
                       'fconst_1', 'fconst_2', 'dconst_0', 'dconst_1']):
    _op(i, n)
_op(0x10, 'bipush', 'b')
_op(0x11, 'sipush', 's')
_op(0x12, 'ldc', 'c1')
_op(0x13, 'ldc_w', 'c2')
_op(0x14, 'ldc2_w', 'c2')
for i, n in enumerate(['iload', 'lload', 'fload', 'dload', 'aload']):
    _op(0x15 + i, n, 'B')
for t_i, t in enumerate('ilfda'):
    for k in range(4):
        _op(0x1a + t_i * 4 + k, '%sload_%d' % (t, k))
for i, n in enumerate(['iaload', 'laload', 'faload', 'daload', 'aaload', 'baload', 'caload',
                       'saload']):
    _op(0x2e + i, n)
for i, n in enumerate(['istore', 'lstore', 'fstore', 'dstore', 'astore']):
    _op(0x36 + i, n, 'B')
for t_i, t in enumerate('ilfda'):
    for k in range(4):
        _op(0x3b + t_i * 4 + k, '%sstore_%d' % (t, k))
for i, n in enumerate(['iastore', 'lastore', 'fastore', 'dastore', 'aastore', 'bastore',
                       'castore', 'sastore', 'pop', 'pop2', 'dup', 'dup_x1', 'dup_x2', 'dup2',
                       'dup2_x1', 'dup2_x2', 'swap']):
    _op(0x4f + i, n)
_arith = []
for opn in ['add', 'sub', 'mul', 'div', 'rem', 'neg']:
    for t in 'ilfd':
        _arith.append(t + opn)
_arith += ['ishl', 'lshl', 'ishr', 'lshr', 'iushr', 'lushr', 'iand', 'land', 'ior', 'lor',
           'ixor', 'lxor']
for i, n in enumerate(_arith):
    _op(0x60 + i, n)
_op(0x84, 'iinc', 'iinc')
for i, n in enumerate(['i2l', 'i2f', 'i2d', 'l2i', 'l2f', 'l2d', 'f2i', 'f2l', 'f2d', 'd2i',
                       'd2l', 'd2f', 'i2b', 'i2c', 'i2s', 'lcmp', 'fcmpl', 'fcmpg', 'dcmpl',
                       'dcmpg']):
    _op(0x85 + i, n)
for i, n in enumerate(['ifeq', 'ifne', 'iflt', 'ifge', 'ifgt', 'ifle', 'if_icmpeq',
                       'if_icmpne', 'if_icmplt', 'if_icmpge', 'if_icmpgt', 'if_icmple',
                       'if_acmpeq', 'if_acmpne', 'goto', 'jsr']):
    _op(0x99 + i, n, 'br')
_op(0xa9, 'ret', 'B')
_op(0xaa, 'tableswitch', 'tswitch')
_op(0xab, 'lookupswitch', 'lswitch')
for i, n in enumerate(['ireturn', 'lreturn', 'freturn', 'dreturn', 'areturn', 'return']):
    _op(0xac + i, n)
for i, n in enumerate(['getstatic', 'putstatic', 'getfield', 'putfield', 'invokevirtual',
                       'invokespecial', 'invokestatic']):
    _op(0xb2 + i, n, 'c2')
_op(0xb9, 'invokeinterface', 'itf')
_op(0xba, 'invokedynamic', 'indy')
_op(0xbb, 'new', 'c2')
_op(0xbc, 'newarray', 'B')
_op(0xbd, 'anewarray', 'c2')
_op(0xbe, 'arraylength')
_op(0xbf, 'athrow')
_op(0xc0, 'checkcast', 'c2')
_op(0xc1, 'instanceof', 'c2')
_op(0xc2, 'monitorenter')
_op(0xc3, 'monitorexit')
_op(0xc5, 'multianewarray', 'multi')
_op(0xc6, 'ifnull', 'br')
_op(0xc7, 'ifnonnull', 'br')
_op(0xc8, 'goto_w', 'brw')
_op(0xc9, 'jsr_w', 'brw')

WIDENABLE = {'iload', 'lload', 'fload', 'dload', 'aload', 'istore', 'lstore', 'fstore',
             'dstore', 'astore', 'ret', 'iinc'}

ACC_PUBLIC = 0x0001
ACC_PRIVATE = 0x0002
ACC_STATIC = 0x0008
ACC_FINAL = 0x0010
ACC_SUPER = 0x0020
ACC_NATIVE = 0x0100
ACC_INTERFACE = 0x0200
ACC_ABSTRACT = 0x0400
ACC_MODULE = 0x8000


def mutf8(s):
    out = bytearray()
    for ch in s:
        cp = ord(ch)
        if cp > 0xFFFF:
            cp -= 0x10000
            units = [0xD800 + (cp >> 10), 0xDC00 + (cp & 0x3FF)]
        else:
            units = [cp]
        for u in units:
            if 0 < u < 0x80:
                out.append(u)
            elif u < 0x800:
                out += bytes([0xC0 | (u >> 6), 0x80 | (u & 0x3F)])
            else:
                out += bytes([0xE0 | (u >> 12), 0x80 | ((u >> 6) & 0x3F), 0x80 | (u & 0x3F)])
    return bytes(out)


class ConstantPool:
    def __init__(self):
        self.entries = [None]  # slot 0 unused
        self.index = {}

    def _add(self, key, payload, wide=False):
        if key in self.index:
            return self.index[key]
        idx = len(self.entries)
        self.entries.append(payload)
        if wide:
            self.entries.append(None)
        self.index[key] = idx
        return idx

    def utf8(self, s):
        b = mutf8(s)
        return self._add(('utf8', s), struct.pack('>BH', 1, len(b)) + b)

    def integer(self, v):
        return self._add(('int', v), struct.pack('>Bi', 3, v))

    def float(self, v):
        return self._add(('float', v), struct.pack('>Bf', 4, v))

    def long(self, v):
        return self._add(('long', v), struct.pack('>Bq', 5, v), wide=True)

    def double(self, v):
        return self._add(('double', v), struct.pack('>Bd', 6, v), wide=True)

    def cls(self, name):
        return self._add(('class', name), struct.pack('>BH', 7, self.utf8(name)))

    def string(self, s):
        return self._add(('string', s), struct.pack('>BH', 8, self.utf8(s)))

    def nat(self, name, desc):
        return self._add(('nat', name, desc),
                         struct.pack('>BHH', 12, self.utf8(name), self.utf8(desc)))

    def fieldref(self, owner, name, desc):
        return self._add(('field', owner, name, desc),
                         struct.pack('>BHH', 9, self.cls(owner), self.nat(name, desc)))

    def methodref(self, owner, name, desc):
        return self._add(('method', owner, name, desc),
                         struct.pack('>BHH', 10, self.cls(owner), self.nat(name, desc)))

    def imethodref(self, owner, name, desc):
        return self._add(('imethod', owner, name, desc),
                         struct.pack('>BHH', 11, self.cls(owner), self.nat(name, desc)))

    def method_handle(self, kind, ref_index):
        return self._add(('mh', kind, ref_index), struct.pack('>BBH', 15, kind, ref_index))

    def method_type(self, desc):
        return self._add(('mt', desc), struct.pack('>BH', 16, self.utf8(desc)))

    def dynamic(self, bsm, name, desc):
        return self._add(('dyn', bsm, name, desc),
                         struct.pack('>BHH', 17, bsm, self.nat(name, desc)))

    def indy(self, bsm, name, desc):
        return self._add(('indy', bsm, name, desc),
                         struct.pack('>BHH', 18, bsm, self.nat(name, desc)))

    def module(self, name):
        return self._add(('module', name), struct.pack('>BH', 19, self.utf8(name)))

    def package(self, name):
        return self._add(('package', name), struct.pack('>BH', 20, self.utf8(name)))

    def to_bytes(self):
        body = b''.join(e for e in self.entries[1:] if e is not None)
        return struct.pack('>H', len(self.entries)) + body


class Code:
    """Instruction list: tuples `(mnemonic, *operands)` or `('label', name)`.

    Operands referring to the constant pool are given as already-resolved
    indices; branch operands are label names. `('wide', mnemonic, *ops)` emits
    the wide form.
    """

    def __init__(self, max_stack, max_locals, insns, exceptions=()):
        self.max_stack = max_stack
        self.max_locals = max_locals
        self.insns = list(insns)
        self.exceptions = list(exceptions)

    @staticmethod
    def _size(insn, pc):
        name = insn[0]
        if name == 'label':
            return 0
        if name == 'wide':
            return 6 if insn[1] == 'iinc' else 4
        fmt = OPCODES[name][1]
        pad = (4 - (pc + 1) % 4) % 4
        if fmt == 'tswitch':
            low, high = insn[1], insn[2]
            return 1 + pad + 12 + 4 * (high - low + 1)
        if fmt == 'lswitch':
            return 1 + pad + 8 + 8 * len(insn[2])
        return 1 + {'': 0, 'b': 1, 'B': 1, 's': 2, 'c1': 1, 'c2': 2, 'br': 2, 'brw': 4,
                    'iinc': 2, 'itf': 4, 'indy': 4, 'multi': 3}[fmt]

    def assemble(self):
        labels = {}
        pc = 0
        for insn in self.insns:
            if insn[0] == 'label':
                labels[insn[1]] = pc
            pc += self._size(insn, pc)
        out = bytearray()
        for insn in self.insns:
            pc = len(out)
            name = insn[0]
            if name == 'label':
                continue
            if name == 'wide':
                inner = insn[1]
                assert inner in WIDENABLE, inner
                out += bytes([0xc4, OPCODES[inner][0]]) + struct.pack('>H', insn[2])
                if inner == 'iinc':
                    out += struct.pack('>h', insn[3])
                continue
            code, fmt = OPCODES[name]
            out.append(code)
            args = insn[1:]
            if fmt == '':
                pass
            elif fmt == 'b':
                out += struct.pack('>b', args[0])
            elif fmt == 'B':
                out += struct.pack('>B', args[0])
            elif fmt == 's':
                out += struct.pack('>h', args[0])
            elif fmt == 'c1':
                out += struct.pack('>B', args[0])
            elif fmt == 'c2':
                out += struct.pack('>H', args[0])
            elif fmt == 'br':
                out += struct.pack('>h', labels[args[0]] - pc)
            elif fmt == 'brw':
                out += struct.pack('>i', labels[args[0]] - pc)
            elif fmt == 'iinc':
                out += struct.pack('>Bb', args[0], args[1])
            elif fmt == 'itf':
                out += struct.pack('>HBB', args[0], args[1], 0)
            elif fmt == 'indy':
                out += struct.pack('>HBB', args[0], 0, 0)
            elif fmt == 'multi':
                out += struct.pack('>HB', args[0], args[1])
            elif fmt in ('tswitch', 'lswitch'):
                while len(out) % 4 != 0:
                    out.append(0)
                if fmt == 'tswitch':
                    low, high, default, targets = args
                    assert len(targets) == high - low + 1
                    out += struct.pack('>iii', labels[default] - pc, low, high)
                    for t in targets:
                        out += struct.pack('>i', labels[t] - pc)
                else:
                    default, pairs = args
                    out += struct.pack('>ii', labels[default] - pc, len(pairs))
                    for key, t in sorted(pairs):
                        out += struct.pack('>ii', key, labels[t] - pc)
            else:
                raise ValueError(fmt)
            assert len(out) - pc == self._size(insn, pc), name
        return bytes(out)


class ClassFile:
    def __init__(self, name, super_name='java/lang/Object', interfaces=(),
                 access=ACC_PUBLIC | ACC_SUPER, major=52, minor=0):
        self.cp = ConstantPool()
        self.name = name
        self.super_name = super_name
        self.interfaces = list(interfaces)
        self.access = access
        self.major = major
        self.minor = minor
        self.fields = []
        self.methods = []
        self.attributes = []
        self.bootstrap_methods = []
        # this/super first so the constant pool layout looks like javac's
        self.this_index = self.cp.cls(name)
        self.super_index = self.cp.cls(super_name) if super_name else 0

    def field(self, name, desc, access=ACC_PRIVATE):
        self.fields.append((access, self.cp.utf8(name), self.cp.utf8(desc)))

    def method(self, name, desc, access=ACC_PUBLIC, code=None):
        self.methods.append((access, name, desc, code))

    def add_bootstrap(self, handle_index, args=()):
        self.bootstrap_methods.append((handle_index, list(args)))
        return len(self.bootstrap_methods) - 1

    def _attr(self, name, payload):
        return struct.pack('>HI', self.cp.utf8(name), len(payload)) + payload

    def to_bytes(self):
        method_blobs = []
        for access, name, desc, code in self.methods:
            attrs = []
            if code is not None:
                body = code.assemble()
                payload = struct.pack('>HHI', code.max_stack, code.max_locals, len(body)) + body
                payload += struct.pack('>H', len(code.exceptions))
                for (start, end, handler, ctype) in code.exceptions:
                    payload += struct.pack('>HHHH', start, end, handler, ctype)
                payload += struct.pack('>H', 0)
                attrs.append(self._attr('Code', payload))
            blob = struct.pack('>HHHH', access, self.cp.utf8(name), self.cp.utf8(desc), len(attrs))
            method_blobs.append(blob + b''.join(attrs))
        class_attrs = list(self.attributes)
        if self.bootstrap_methods:
            payload = struct.pack('>H', len(self.bootstrap_methods))
            for handle, args in self.bootstrap_methods:
                payload += struct.pack('>HH', handle, len(args))
                for a in args:
                    payload += struct.pack('>H', a)
            class_attrs.append(self._attr('BootstrapMethods', payload))
        field_blobs = [struct.pack('>HHHH', a, n, d, 0) for (a, n, d) in self.fields]
        iface_idx = [self.cp.cls(i) for i in self.interfaces]
        # every constant-pool entry must exist before the pool is serialized
        out = struct.pack('>IHH', 0xCAFEBABE, self.minor, self.major)
        out += self.cp.to_bytes()
        out += struct.pack('>HHH', self.access, self.this_index, self.super_index)
        out += struct.pack('>H', len(iface_idx)) + b''.join(struct.pack('>H', i) for i in iface_idx)
        out += struct.pack('>H', len(field_blobs)) + b''.join(field_blobs)
        out += struct.pack('>H', len(method_blobs)) + b''.join(method_blobs)
        out += struct.pack('>H', len(class_attrs)) + b''.join(class_attrs)
        return out

    def add_source_file(self, source):
        self.attributes.append(self._attr('SourceFile', struct.pack('>H', self.cp.utf8(source))))
