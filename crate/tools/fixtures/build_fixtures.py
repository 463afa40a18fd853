#!/usr/bin/env python3
"""Regenerates the binary test fixtures under crates/core/tests/fixtures.

    python3 tools/fixtures/build_fixtures.py
    python3 tools/fixtures/oracle_listing.py

Outputs are deterministic (fixed ZIP timestamps, seeded RNG), so rerunning
produces byte-identical files.
"""

import json
import os
import random
import shutil
import struct
import sys
import zipfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from classgen import (  # noqa: E402
    ACC_ABSTRACT, ACC_FINAL, ACC_INTERFACE, ACC_MODULE, ACC_PRIVATE, ACC_PUBLIC, ACC_STATIC,
    ACC_SUPER, OPCODES, WIDENABLE, ClassFile, Code,
)

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
OUT = os.path.join(ROOT, 'crates', 'core', 'tests', 'fixtures')
ZIP_TIME = (2020, 1, 1, 0, 0, 0)

OBJECT = 'java/lang/Object'
LAMBDA_META = ('java/lang/invoke/LambdaMetafactory', 'metafactory',
               '(Ljava/lang/invoke/MethodHandles$Lookup;Ljava/lang/String;'
               'Ljava/lang/invoke/MethodType;Ljava/lang/invoke/MethodType;'
               'Ljava/lang/invoke/MethodHandle;Ljava/lang/invoke/MethodType;)'
               'Ljava/lang/invoke/CallSite;')
REF_INVOKE_STATIC = 6


def write(path, data):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, 'wb') as f:
        f.write(data)


def write_zip(path, entries):
    """entries: list of (name, bytes, compression)"""
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with zipfile.ZipFile(path, 'w') as zf:
        for name, data, comp in entries:
            info = zipfile.ZipInfo(name, date_time=ZIP_TIME)
            info.compress_type = comp
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)


def arg_slots(desc):
    """Number of argument slots in a method descriptor (long/double count 2)."""
    i = desc.index('(') + 1
    slots = 0
    while desc[i] != ')':
        c = desc[i]
        if c in 'JD':
            slots += 2
            i += 1
        elif c == 'L':
            slots += 1
            i = desc.index(';', i) + 1
        elif c == '[':
            while desc[i] == '[':
                i += 1
            if desc[i] == 'L':
                i = desc.index(';', i) + 1
            else:
                i += 1
            slots += 1
        else:
            slots += 1
            i += 1
    return slots


def lambda_bootstrap(cf, impl_owner, impl_name, impl_desc, sam_desc):
    cp = cf.cp
    bsm = cp.method_handle(REF_INVOKE_STATIC, cp.methodref(*LAMBDA_META))
    impl = cp.method_handle(REF_INVOKE_STATIC, cp.methodref(impl_owner, impl_name, impl_desc))
    return cf.add_bootstrap(bsm, [cp.method_type(sam_desc), impl, cp.method_type(sam_desc)])


# ---------------------------------------------------------------------------
# single-class parser fixtures
# ---------------------------------------------------------------------------

def fixture01():
    name = 'fixture/Fixture01'
    cf = ClassFile(name, interfaces=['java/lang/Runnable'])
    cp = cf.cp
    cf.field('count', 'I')
    cf.method('<init>', '()V', code=Code(1, 1, [
        ('aload_0',),
        ('invokespecial', cp.methodref(OBJECT, '<init>', '()V')),
        ('return',),
    ]))
    cf.method('run', '()V', code=Code(2, 1, [
        ('aload_0',),
        ('invokevirtual', cp.methodref(name, 'helper', '()I')),
        ('pop',),
        ('return',),
    ]))
    cf.method('helper', '()I', code=Code(1, 1, [('iconst_1',), ('ireturn',)]))
    bsm = lambda_bootstrap(cf, name, 'lambda$main$0', '()V', '()V')
    cf.method('main', '([Ljava/lang/String;)V', access=ACC_PUBLIC | ACC_STATIC, code=Code(4, 3, [
        ('new', cp.cls(name)),
        ('dup',),
        ('invokespecial', cp.methodref(name, '<init>', '()V')),
        ('astore_1',),
        ('aload_1',),
        ('invokeinterface', cp.imethodref('java/lang/Runnable', 'run', '()V'), 1),
        ('aload_1',),
        ('invokevirtual', cp.methodref(name, 'helper', '()I')),
        ('istore_2',),
        ('getstatic', cp.fieldref('java/lang/System', 'out', 'Ljava/io/PrintStream;')),
        ('ldc', cp.string('fixture01')),
        ('invokevirtual', cp.methodref('java/io/PrintStream', 'println', '(Ljava/lang/String;)V')),
        ('ldc2_w', cp.long(1234567890123)),
        ('invokestatic', cp.methodref('java/lang/Long', 'valueOf', '(J)Ljava/lang/Long;')),
        ('pop',),
        ('invokedynamic', cp.indy(bsm, 'run', '()Ljava/lang/Runnable;')),
        ('invokeinterface', cp.imethodref('java/lang/Runnable', 'run', '()V'), 1),
        ('invokestatic', cp.imethodref('java/util/Comparator', 'naturalOrder',
                                       '()Ljava/util/Comparator;')),
        ('pop',),
        ('return',),
    ]))
    cf.method('lambda$main$0', '()V', access=ACC_PRIVATE | ACC_STATIC | 0x1000, code=Code(0, 0, [
        ('return',),
    ]))
    cf.add_source_file('Fixture01.java')
    return cf.to_bytes()


def switch_padding():
    name = 'fixture/SwitchPadding'
    cf = ClassFile(name, major=49)
    cp = cf.cp
    target = cp.methodref(name, 'f', '(I)I')
    cf.method('f', '(I)I', access=ACC_PUBLIC | ACC_STATIC, code=Code(1, 1, [
        ('iload_0',), ('ireturn',),
    ]))
    # the switch opcode lands on pc % 4 == pad for each method
    for pad in range(4):
        # iload_0 takes one byte, so shift the nops to land the switch on `pad`
        insns = [('nop',)] * ((pad - 1) % 4) + [('iload_0',)]
        insns += [('tableswitch', 0, 2, 'dflt', ['c0', 'c1', 'c2'])]
        for i in range(3):
            insns += [('label', 'c%d' % i), ('bipush', i * 7),
                      ('invokestatic', target), ('ireturn',)]
        insns += [('label', 'dflt'), ('iconst_m1',), ('ireturn',)]
        cf.method('table%d' % pad, '(I)I', access=ACC_PUBLIC | ACC_STATIC,
                  code=Code(2, 1, insns))
    for pad in range(4):
        insns = [('nop',)] * ((pad - 1) % 4) + [('iload_0',)]
        insns += [('lookupswitch', 'dflt', [(-100, 'a'), (5, 'b'), (1000000, 'c')])]
        for lbl, val in (('a', 1), ('b', 2), ('c', 3)):
            insns += [('label', lbl), ('iconst_%d' % val,), ('invokestatic', target),
                      ('ireturn',)]
        insns += [('label', 'dflt'), ('iload_0',), ('invokestatic', target), ('ireturn',)]
        cf.method('lookup%d' % pad, '(I)I', access=ACC_PUBLIC | ACC_STATIC,
                  code=Code(2, 1, insns))
    cf.method('wide', '(I)I', access=ACC_PUBLIC | ACC_STATIC, code=Code(2, 301, [
        ('iload_0',),
        ('wide', 'istore', 300),
        ('wide', 'iinc', 300, 1000),
        ('wide', 'iinc', 300, -2),
        ('wide', 'iload', 300),
        ('invokestatic', target),
        ('wide', 'istore', 299),
        ('wide', 'iload', 299),
        ('ireturn',),
    ]))
    cf.method('far', '(I)I', access=ACC_PUBLIC | ACC_STATIC, code=Code(2, 1, [
        ('iload_0',),
        ('ifeq', 'zero'),
        ('goto_w', 'tail'),
        ('label', 'zero'),
        ('iconst_5',),
        ('invokestatic', target),
        ('ireturn',),
        ('label', 'tail'),
        ('iload_0',),
        ('invokestatic', target),
        ('ireturn',),
    ]))
    main = []
    for pad in range(4):
        main += [('iconst_1',), ('invokestatic', cp.methodref(name, 'table%d' % pad, '(I)I')),
                 ('pop',)]
        main += [('bipush', 5), ('invokestatic', cp.methodref(name, 'lookup%d' % pad, '(I)I')),
                 ('pop',)]
    main += [('iconst_3',), ('invokestatic', cp.methodref(name, 'wide', '(I)I')), ('pop',)]
    main += [('iconst_0',), ('invokestatic', cp.methodref(name, 'far', '(I)I')), ('pop',)]
    main += [('return',)]
    cf.method('main', '([Ljava/lang/String;)V', access=ACC_PUBLIC | ACC_STATIC,
              code=Code(2, 1, main))
    return cf.to_bytes()


def long_double():
    name = 'fixture/LongDouble'
    cf = ClassFile(name)
    cp = cf.cp
    # wide constants occupy two slots; placing them ahead of the method refs
    # shifts every later index
    longs = [cp.long(v) for v in (1, -1, 1 << 40, -(1 << 62))]
    doubles = [cp.double(v) for v in (0.5, -2.25, 1e300)]
    cp.integer(42)
    cp.float(1.5)
    insns = []
    for idx in longs:
        insns += [('ldc2_w', idx), ('ldc2_w', longs[0]),
                  ('invokestatic', cp.methodref('java/lang/Math', 'max', '(JJ)J')), ('pop2',)]
    for idx in doubles:
        insns += [('ldc2_w', idx),
                  ('invokestatic', cp.methodref('java/lang/Math', 'abs', '(D)D')), ('pop2',)]
    insns += [('invokestatic', cp.methodref(name, 'after', '()V')), ('return',)]
    cf.method('main', '([Ljava/lang/String;)V', access=ACC_PUBLIC | ACC_STATIC,
              code=Code(4, 1, insns))
    cf.method('after', '()V', access=ACC_PUBLIC | ACC_STATIC, code=Code(0, 0, [('return',)]))
    return cf.to_bytes()


def empty_class():
    return ClassFile('fixture/Empty').to_bytes()


def greeter_interface():
    name = 'fixture/Greeter'
    cf = ClassFile(name, access=ACC_PUBLIC | ACC_INTERFACE | ACC_ABSTRACT, major=55)
    cp = cf.cp
    cf.method('greet', '()Ljava/lang/String;', access=ACC_PUBLIC | ACC_ABSTRACT)
    cf.method('hello', '()V', code=Code(2, 1, [
        ('aload_0',),
        ('invokeinterface', cp.imethodref(name, 'greet', '()Ljava/lang/String;'), 1),
        ('pop',),
        ('aload_0',),
        ('invokeinterface', cp.imethodref(name, 'secret', '()V'), 1),
        ('return',),
    ]))
    cf.method('secret', '()V', access=ACC_PRIVATE, code=Code(0, 1, [('return',)]))
    cf.method('create', '()Lfixture/Greeter;', access=ACC_PUBLIC | ACC_STATIC, code=Code(1, 0, [
        ('aconst_null',), ('areturn',),
    ]))
    return cf.to_bytes()


def future_version():
    name = 'fixture/Future'
    cf = ClassFile(name, major=99)
    cp = cf.cp
    cf.method('<init>', '()V', code=Code(1, 1, [
        ('aload_0',), ('invokespecial', cp.methodref(OBJECT, '<init>', '()V')), ('return',),
    ]))
    return cf.to_bytes()


def all_constants():
    """Every constant-pool tag, including the module-only ones."""
    name = 'fixture/AllConstants'
    cf = ClassFile(name, major=55)
    cp = cf.cp
    cp.integer(-7)
    cp.float(3.25)
    cp.long(99)
    cp.double(2.5)
    cp.string('hello é中\U0001F600 \x00 end')
    cp.fieldref(name, 'f', 'I')
    cp.imethodref('java/util/List', 'size', '()I')
    mt = cp.method_type('(I)V')
    mh = cp.method_handle(REF_INVOKE_STATIC, cp.methodref(name, 'target', '(I)V'))
    bsm = cf.add_bootstrap(mh, [mt])
    cp.dynamic(bsm, 'CONST', 'I')
    cp.module('java.base')
    cp.package('fixture')
    indy = cp.indy(bsm, 'go', '()V')
    cf.method('target', '(I)V', access=ACC_PUBLIC | ACC_STATIC, code=Code(0, 1, [('return',)]))
    cf.method('use', '()V', access=ACC_PUBLIC | ACC_STATIC, code=Code(1, 0, [
        ('invokedynamic', indy),
        ('iconst_2',),
        ('invokestatic', cp.methodref(name, 'target', '(I)V')),
        ('return',),
    ]))
    return cf.to_bytes()


def opcode_soup():
    """Every opcode once, with invocations interleaved; structurally valid only."""
    name = 'fixture/OpcodeSoup'
    cf = ClassFile(name, major=49)
    cp = cf.cp
    call = cp.methodref(name, 'mark', '()V')
    operands = {
        '': (),
        'b': (-5,),
        'B': (3,),
        's': (-1234,),
        'c1': (cp.integer(77),),
        'c2': (cp.cls('java/lang/String'),),
        'br': ('end',),
        'brw': ('end',),
        'iinc': (2, -3),
        'itf': (cp.imethodref('java/lang/Runnable', 'run', '()V'), 1),
        'indy': (None,),
        'multi': (cp.cls('[[I'), 2),
        'tswitch': (-1, 1, 'end', ['end', 'end', 'end']),
        'lswitch': ('end', [(3, 'end'), (-9, 'end')]),
    }
    ldc2 = cp.long(5)
    field = cp.fieldref(name, 'x', 'I')
    bsm = lambda_bootstrap(cf, name, 'mark', '()V', '()V')
    indy = cp.indy(bsm, 'run', '()Ljava/lang/Runnable;')
    insns = []
    for mnemonic, (code, fmt) in sorted(OPCODES.items(), key=lambda kv: kv[1][0]):
        ops = operands[fmt]
        if mnemonic == 'ldc2_w':
            ops = (ldc2,)
        elif mnemonic in ('getstatic', 'putstatic', 'getfield', 'putfield'):
            ops = (field,)
        elif mnemonic in ('invokevirtual', 'invokespecial', 'invokestatic'):
            ops = (cp.methodref(name, 'm' + mnemonic[6:], '()V'),)
        elif mnemonic == 'invokedynamic':
            ops = (indy,)
        elif mnemonic == 'newarray':
            ops = (10,)
        insns.append((mnemonic,) + tuple(ops))
        if code % 9 == 0:
            insns.append(('invokestatic', call))
    for w in sorted(WIDENABLE):
        insns.append(('wide', w, 513, 7) if w == 'iinc' else ('wide', w, 513))
    insns.append(('invokestatic', call))
    insns += [('label', 'end'), ('return',)]
    cf.method('soup', '()V', access=ACC_PUBLIC | ACC_STATIC, code=Code(10, 600, insns))
    cf.method('mark', '()V', access=ACC_PUBLIC | ACC_STATIC, code=Code(0, 0, [('return',)]))
    return cf.to_bytes()


def module_info():
    cf = ClassFile('module-info', super_name=None, access=ACC_MODULE, major=53)
    return cf.to_bytes()


def simple_class(name, super_name=OBJECT, calls=()):
    cf = ClassFile(name, super_name=super_name)
    cp = cf.cp
    insns = [('aload_0',), ('invokespecial', cp.methodref(super_name, '<init>', '()V'))]
    for owner, mname, desc in calls:
        insns.append(('invokestatic', cp.methodref(owner, mname, desc)))
    insns.append(('return',))
    cf.method('<init>', '()V', code=Code(1, 1, insns))
    return cf.to_bytes()


def build_class_fixtures():
    d = os.path.join(OUT, 'classes')
    shutil.rmtree(d, ignore_errors=True)
    write(os.path.join(d, 'Fixture01.class'), fixture01())
    write(os.path.join(d, 'SwitchPadding.class'), switch_padding())
    write(os.path.join(d, 'LongDouble.class'), long_double())
    write(os.path.join(d, 'Empty.class'), empty_class())
    write(os.path.join(d, 'Greeter.class'), greeter_interface())
    write(os.path.join(d, 'Future.class'), future_version())
    write(os.path.join(d, 'AllConstants.class'), all_constants())
    write(os.path.join(d, 'OpcodeSoup.class'), opcode_soup())
    write(os.path.join(d, 'module-info.class'), module_info())


def build_jar_fixtures():
    d = os.path.join(OUT, 'jars')
    shutil.rmtree(d, ignore_errors=True)
    a = simple_class('demo/A')
    b = simple_class('demo/B', 'demo/A', [('demo/C', 'util', '()V')])
    c = simple_class('demo/C')
    write_zip(os.path.join(d, 'three.jar'), [
        ('META-INF/MANIFEST.MF', b'Manifest-Version: 1.0\r\n\r\n', zipfile.ZIP_DEFLATED),
        ('demo/', b'', zipfile.ZIP_STORED),
        ('demo/A.class', a, zipfile.ZIP_DEFLATED),
        ('demo/config.properties', b'key=value\n', zipfile.ZIP_DEFLATED),
        ('demo/B.class', b, zipfile.ZIP_STORED),
        ('demo/C.class', c, zipfile.ZIP_DEFLATED),
    ])
    write_zip(os.path.join(d, 'corrupt.jar'), [
        ('demo/A.class', a, zipfile.ZIP_DEFLATED),
        ('demo/Broken.class', b[: len(b) // 2], zipfile.ZIP_DEFLATED),
        ('demo/C.class', c, zipfile.ZIP_STORED),
    ])
    write_zip(os.path.join(d, 'filters.jar'), [
        ('META-INF/MANIFEST.MF', b'Manifest-Version: 1.0\r\nMulti-Release: true\r\n\r\n',
         zipfile.ZIP_DEFLATED),
        ('module-info.class', module_info(), zipfile.ZIP_DEFLATED),
        ('demo/A.class', a, zipfile.ZIP_DEFLATED),
        ('META-INF/versions/9/demo/A.class', simple_class('demo/A', calls=[
            ('demo/Nine', 'only', '()V')]), zipfile.ZIP_DEFLATED),
        ('META-INF/versions/11/module-info.class', module_info(), zipfile.ZIP_STORED),
        ('META-INF/services/demo.Service', b'demo.A\n', zipfile.ZIP_STORED),
        ('demo/notes.txt', b'plain text', zipfile.ZIP_STORED),
    ])
    write_zip(os.path.join(d, 'empty.jar'), [])
    path = os.path.join(d, 'zip64.jar')
    with zipfile.ZipFile(path, 'w') as zf:
        for nm, data in (('demo/A.class', a), ('demo/C.class', c)):
            info = zipfile.ZipInfo(nm, date_time=ZIP_TIME)
            info.compress_type = zipfile.ZIP_DEFLATED
            with zf.open(info, 'w', force_zip64=True) as fh:
                fh.write(data)


# ---------------------------------------------------------------------------
# multi-package programs
# ---------------------------------------------------------------------------

class M:
    def __init__(self, name, desc, flags=ACC_PUBLIC, calls=()):
        self.name = name
        self.desc = desc
        self.flags = flags
        self.calls = list(calls)


class K:
    def __init__(self, name, super_name=OBJECT, ifaces=(), flags=ACC_PUBLIC | ACC_SUPER,
                 methods=(), major=52):
        self.name = name
        self.super_name = super_name
        self.ifaces = list(ifaces)
        self.flags = flags
        self.methods = list(methods)
        self.major = major


def iface(name, ifaces=(), methods=()):
    return K(name, OBJECT, ifaces, ACC_PUBLIC | ACC_INTERFACE | ACC_ABSTRACT, methods)


FILLERS = [('aconst_null', 'pop'), ('iconst_0', 'pop'), ('nop',), ('bipush', 'pop'),
           ('sipush', 'pop'), ('ldc', 'pop')]


def assemble_class(k, rng):
    cf = ClassFile(k.name, k.super_name, k.ifaces, k.flags, major=k.major)
    cp = cf.cp
    for m in k.methods:
        if m.flags & ACC_ABSTRACT:
            cf.method(m.name, m.desc, m.flags)
            continue
        insns = []
        for call in m.calls:
            kind, owner, name, desc = call[:4]
            on_interface = len(call) > 4 and call[4] == 'itf'
            filler = FILLERS[rng.randrange(len(FILLERS))]
            for f in filler:
                if f == 'bipush':
                    insns.append(('bipush', rng.randrange(-100, 100)))
                elif f == 'sipush':
                    insns.append(('sipush', rng.randrange(-30000, 30000)))
                elif f == 'ldc':
                    insns.append(('ldc', cp.string('s%d' % rng.randrange(1000))))
                else:
                    insns.append((f,))
            if kind == 'static':
                ref = cp.imethodref(owner, name, desc) if on_interface \
                    else cp.methodref(owner, name, desc)
                insns.append(('invokestatic', ref))
            elif kind == 'special':
                ref = cp.imethodref(owner, name, desc) if on_interface \
                    else cp.methodref(owner, name, desc)
                insns.append(('invokespecial', ref))
            elif kind == 'virtual':
                insns.append(('invokevirtual', cp.methodref(owner, name, desc)))
            elif kind == 'interface':
                insns.append(('invokeinterface', cp.imethodref(owner, name, desc),
                              1 + arg_slots(desc)))
            elif kind == 'dynamic':
                bsm = lambda_bootstrap(cf, owner, name, desc, '()V')
                insns.append(('invokedynamic', cp.indy(bsm, 'run', '()Ljava/lang/Runnable;')))
            else:
                raise ValueError(kind)
        insns.append(('return',))
        cf.method(m.name, m.desc, m.flags, Code(8, 8, insns))
    return cf.to_bytes()


def init(super_name=OBJECT, extra=()):
    return M('<init>', '()V', calls=[('special', super_name, '<init>', '()V')] + list(extra))


MAIN = '([Ljava/lang/String;)V'
PS = ACC_PUBLIC | ACC_STATIC


def programs():
    P = {}

    P['p01_static'] = ([
        ('fx.p01:util:1.0', [
            K('p01/util/Util', methods=[
                M('max', '(II)I', PS),
                M('clamp', '(III)I', PS, [('static', 'p01/util/Util', 'max', '(II)I')]),
            ]),
            K('p01/util/MathBase', methods=[M('abs', '(I)I', PS)]),
            K('p01/util/MathExt', 'p01/util/MathBase', methods=[
                M('sq', '(I)I', PS, [('static', 'p01/util/MathExt', 'abs', '(I)I')]),
            ]),
        ]),
        ('fx.p01:app:1.0', [
            K('p01/app/Main', methods=[M('main', MAIN, PS, [
                ('static', 'p01/util/Util', 'max', '(II)I'),
                ('static', 'p01/util/Util', 'clamp', '(III)I'),
                ('static', 'p01/util/MathExt', 'abs', '(I)I'),
                ('static', 'p01/util/MathExt', 'sq', '(I)I'),
                ('static', 'p01/util/Util', 'missing', '()V'),
                ('static', 'java/lang/Math', 'max', '(II)I'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p01:app:1.0', 'children': [{'coordinate': 'fx.p01:util:1.0'}]})

    P['p02_override_chain'] = ([
        ('fx.p02:base:1.0', [
            K('p02/base/A', methods=[
                init(),
                M('m', '()V'),
                M('run', '()V', calls=[('virtual', 'p02/base/A', 'm', '()V')]),
            ]),
        ]),
        ('fx.p02:mid:1.0', [
            K('p02/mid/B', 'p02/base/A', methods=[
                init('p02/base/A'),
                M('m', '()V', calls=[('special', 'p02/base/A', 'm', '()V')]),
            ]),
        ]),
        ('fx.p02:app:1.0', [
            K('p02/app/C', 'p02/mid/B', methods=[init('p02/mid/B'), M('m', '()V')]),
            K('p02/app/D', 'p02/mid/B', methods=[init('p02/mid/B')]),
            K('p02/app/Main', methods=[M('main', MAIN, PS, [
                ('special', 'p02/app/C', '<init>', '()V'),
                ('virtual', 'p02/base/A', 'm', '()V'),
                ('virtual', 'p02/mid/B', 'm', '()V'),
                ('virtual', 'p02/app/D', 'm', '()V'),
                ('virtual', 'p02/app/C', 'run', '()V'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p02:app:1.0', 'children': [
        {'coordinate': 'fx.p02:mid:1.0', 'children': [{'coordinate': 'fx.p02:base:1.0'}]}]})

    P['p03_diamond'] = ([
        ('fx.p03:api:1.0', [
            iface('p03/api/I1', methods=[M('m', '()V', ACC_PUBLIC | ACC_ABSTRACT)]),
            iface('p03/api/I2', methods=[M('m', '()V')]),
            iface('p03/api/J', ['p03/api/I1', 'p03/api/I2']),
            # two paths converging on one top interface
            iface('p03/api/Top', methods=[M('t', '()V', ACC_PUBLIC | ACC_ABSTRACT)]),
            iface('p03/api/Left', ['p03/api/Top']),
            iface('p03/api/Right', ['p03/api/Top'], methods=[M('t', '()V')]),
        ]),
        ('fx.p03:impl:1.0', [
            K('p03/impl/Both', ifaces=['p03/api/I1', 'p03/api/I2'], methods=[init()]),
            K('p03/impl/Own', ifaces=['p03/api/I2'], methods=[init(), M('m', '()V')]),
            K('p03/impl/Sub', 'p03/impl/Both', methods=[init('p03/impl/Both'), M('m', '()V')]),
            K('p03/impl/Jay', ifaces=['p03/api/J'], methods=[init()]),
            K('p03/impl/Meet', ifaces=['p03/api/Left', 'p03/api/Right'], methods=[init()]),
            K('p03/impl/MeetOwn', ifaces=['p03/api/Left', 'p03/api/Right'], methods=[init(), M('t', '()V')]),
        ]),
        ('fx.p03:app:1.0', [
            K('p03/app/Main', methods=[M('main', MAIN, PS, [
                ('interface', 'p03/api/I1', 'm', '()V'),
                ('interface', 'p03/api/I2', 'm', '()V'),
                ('virtual', 'p03/impl/Both', 'm', '()V'),
                ('interface', 'p03/api/J', 'm', '()V'),
                ('virtual', 'p03/impl/Jay', 'm', '()V'),
                ('interface', 'p03/api/Top', 't', '()V'),
                ('interface', 'p03/api/Left', 't', '()V'),
                ('virtual', 'p03/impl/Meet', 't', '()V'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p03:app:1.0', 'children': [
        {'coordinate': 'fx.p03:impl:1.0', 'children': [{'coordinate': 'fx.p03:api:1.0'}]}]})

    P['p04_abstract'] = ([
        ('fx.p04:lib:1.0', [
            K('p04/lib/Shape', flags=ACC_PUBLIC | ACC_SUPER | ACC_ABSTRACT, methods=[
                init(),
                M('area', '()D', ACC_PUBLIC | ACC_ABSTRACT),
                M('describe', '()Ljava/lang/String;',
                  calls=[('virtual', 'p04/lib/Shape', 'area', '()D')]),
            ]),
            K('p04/lib/Polygon', 'p04/lib/Shape', flags=ACC_PUBLIC | ACC_SUPER | ACC_ABSTRACT,
              methods=[init('p04/lib/Shape'), M('sides', '()I', ACC_PUBLIC | ACC_ABSTRACT)]),
        ]),
        ('fx.p04:ext:1.0', [
            K('p04/ext/Square', 'p04/lib/Polygon', methods=[
                init('p04/lib/Polygon'), M('area', '()D'), M('sides', '()I')]),
            K('p04/ext/Tri', 'p04/lib/Polygon', flags=ACC_PUBLIC | ACC_SUPER | ACC_ABSTRACT,
              methods=[init('p04/lib/Polygon'), M('sides', '()I')]),
        ]),
        ('fx.p04:app:1.0', [
            K('p04/app/Main', methods=[M('main', MAIN, PS, [
                ('virtual', 'p04/lib/Shape', 'area', '()D'),
                ('virtual', 'p04/lib/Polygon', 'sides', '()I'),
                ('virtual', 'p04/lib/Shape', 'describe', '()Ljava/lang/String;'),
                ('virtual', 'p04/ext/Square', 'describe', '()Ljava/lang/String;'),
                ('virtual', 'p04/ext/Tri', 'area', '()D'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p04:app:1.0', 'children': [
        {'coordinate': 'fx.p04:ext:1.0'}, {'coordinate': 'fx.p04:lib:1.0'}]})

    P['p05_final'] = ([
        ('fx.p05:lib:1.0', [
            K('p05/lib/Token', flags=ACC_PUBLIC | ACC_SUPER | ACC_FINAL, methods=[
                init(), M('value', '()I'), M('toString', '()Ljava/lang/String;')]),
            K('p05/lib/Box', methods=[
                init(), M('get', '()Ljava/lang/Object;', ACC_PUBLIC | ACC_FINAL),
                M('peek', '()V')]),
        ]),
        ('fx.p05:app:1.0', [
            K('p05/app/SubBox', 'p05/lib/Box', methods=[
                init('p05/lib/Box'), M('peek', '()V'),
                M('other', '()V', calls=[('virtual', 'p05/app/SubBox', 'get',
                                          '()Ljava/lang/Object;')])]),
            K('p05/app/Main', methods=[M('main', MAIN, PS, [
                ('virtual', 'p05/lib/Token', 'value', '()I'),
                ('virtual', 'p05/lib/Token', 'hashCode', '()I'),
                ('virtual', 'p05/lib/Box', 'get', '()Ljava/lang/Object;'),
                ('virtual', 'p05/lib/Box', 'peek', '()V'),
                ('virtual', 'p05/app/SubBox', 'get', '()Ljava/lang/Object;'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p05:app:1.0', 'children': [{'coordinate': 'fx.p05:lib:1.0'}]})

    shadow_core = ('fx.p06:core:1.0', [
        K('p06/x/C', methods=[
            init(),
            M('v', '()I', PS),
            M('m', '()V', calls=[('static', 'p06/x/Helper', 'h', '()V')]),
        ]),
        K('p06/x/Helper', methods=[M('h', '()V', PS)]),
    ])
    shadow_fork = ('fx.p06:fork:1.0', [
        K('p06/x/C', methods=[
            init(),
            M('v', '()I', PS, [('static', 'p06/x/C', 'w', '()I')]),
            M('w', '()I', PS),
            M('m', '()V'),
        ]),
        K('p06/fork/Extra', 'p06/x/C', methods=[init('p06/x/C'), M('m', '()V')]),
    ])
    shadow_app = ('fx.p06:app:1.0', [
        K('p06/app/Main', methods=[M('main', MAIN, PS, [
            ('static', 'p06/x/C', 'v', '()I'),
            ('static', 'p06/x/C', 'w', '()I'),
            ('virtual', 'p06/x/C', 'm', '()V'),
            ('special', 'p06/fork/Extra', '<init>', '()V'),
        ])]),
    ])
    P['p06_shadow'] = ([shadow_core, shadow_fork, shadow_app], {
        'coordinate': 'fx.p06:app:1.0', 'children': [
            {'coordinate': 'fx.p06:core:1.0'}, {'coordinate': 'fx.p06:fork:1.0'}]})
    P['p13_shadow_reversed'] = ([shadow_core, shadow_fork, shadow_app], {
        'coordinate': 'fx.p06:app:1.0', 'children': [
            {'coordinate': 'fx.p06:fork:1.0'}, {'coordinate': 'fx.p06:core:1.0'}]})

    servlet = 'javax/servlet/http/HttpServlet'
    P['p07_phantom'] = ([
        ('fx.p07:web:1.0', [
            K('p07/web/MyServlet', servlet, methods=[
                init(servlet),
                M('doGet', '()V', calls=[
                    ('virtual', 'p07/web/MyServlet', 'log', '(Ljava/lang/String;)V'),
                    ('special', servlet, 'init', '()V'),
                    ('virtual', 'p07/web/MyServlet', 'getServletName', '()Ljava/lang/String;'),
                ]),
            ]),
            K('p07/web/AdminServlet', 'p07/web/MyServlet', methods=[
                init('p07/web/MyServlet'), M('log', '(Ljava/lang/String;)V')]),
            K('p07/web/Listener', ifaces=['javax/servlet/ServletContextListener'], methods=[
                init(), M('contextInitialized', '(Ljavax/servlet/ServletContextEvent;)V')]),
        ]),
        ('fx.p07:app:1.0', [
            K('p07/app/Main', methods=[M('main', MAIN, PS, [
                ('special', 'p07/web/MyServlet', '<init>', '()V'),
                ('interface', 'javax/servlet/ServletContextListener', 'contextInitialized',
                 '(Ljavax/servlet/ServletContextEvent;)V'),
                ('static', 'p07/web/MyServlet', 'getServletContext',
                 '()Ljavax/servlet/ServletContext;'),
                ('virtual', 'p07/web/MyServlet', 'doGet', '()V'),
                ('virtual', 'p07/web/AdminServlet', 'destroy', '()V'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p07:app:1.0', 'children': [{'coordinate': 'fx.p07:web:1.0'}]})

    P['p08_special'] = ([
        ('fx.p08:lib:1.0', [
            K('p08/lib/Base', methods=[
                init(),
                M('secret', '()V', ACC_PRIVATE),
                M('greet', '()V', calls=[
                    ('special', 'p08/lib/Base', 'secret', '()V'),
                    ('virtual', 'p08/lib/Base', 'greet2', '()V'),
                ]),
                M('greet2', '()V'),
            ]),
        ]),
        ('fx.p08:app:1.0', [
            K('p08/app/Child', 'p08/lib/Base', methods=[
                init('p08/lib/Base'),
                M('greet', '()V', calls=[('special', 'p08/lib/Base', 'greet', '()V')]),
                M('secret', '()V', ACC_PRIVATE),
            ]),
            K('p08/app/GrandChild', 'p08/app/Child', methods=[init('p08/app/Child')]),
            K('p08/app/Main', methods=[M('main', MAIN, PS, [
                ('special', 'p08/app/GrandChild', '<init>', '()V'),
                ('virtual', 'p08/lib/Base', 'greet', '()V'),
                ('special', 'p08/app/GrandChild', 'greet', '()V'),
                ('virtual', 'p08/lib/Base', 'secret', '()V'),
                ('special', 'p08/app/GrandChild', 'nope', '()V'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p08:app:1.0', 'children': [{'coordinate': 'fx.p08:lib:1.0'}]})

    P['p09_dynamic'] = ([
        ('fx.p09:lib:1.0', [
            K('p09/lib/Streams', methods=[
                M('map', '(Ljava/util/function/Function;)V', PS, [
                    ('interface', 'java/util/function/Function', 'apply',
                     '(Ljava/lang/Object;)Ljava/lang/Object;'),
                ]),
            ]),
        ]),
        ('fx.p09:app:1.0', [
            K('p09/app/Main', methods=[
                M('main', MAIN, PS, [
                    ('dynamic', 'p09/app/Main', 'lambda$main$0', '()V'),
                    ('static', 'p09/lib/Streams', 'map', '(Ljava/util/function/Function;)V'),
                    ('dynamic', 'p09/app/Main', 'lambda$main$1', '()V'),
                    ('static', 'p09/app/Main', 'lambda$main$0', '()V'),
                ]),
                M('lambda$main$0', '()V', ACC_PRIVATE | ACC_STATIC),
                M('lambda$main$1', '()V', ACC_PRIVATE | ACC_STATIC, [
                    ('dynamic', 'p09/app/Main', 'lambda$main$0', '()V')]),
            ]),
        ]),
    ], {'coordinate': 'fx.p09:app:1.0', 'children': [{'coordinate': 'fx.p09:lib:1.0'}]})

    P['p10_shapes'] = ([
        ('fx.shapes:shapes:1.0', [
            iface('shapes/Shape', methods=[M('area', '()D', ACC_PUBLIC | ACC_ABSTRACT)]),
        ]),
        ('fx.shapes:circle:1.0', [
            K('circle/Circle', ifaces=['shapes/Shape'], methods=[M('area', '()D')]),
        ]),
        ('fx.shapes:app:1.0', [
            K('app/Main', methods=[M('main', MAIN, PS, [
                ('interface', 'shapes/Shape', 'area', '()D'),
            ])]),
        ]),
    ], {'coordinate': 'fx.shapes:app:1.0', 'children': [
        {'coordinate': 'fx.shapes:shapes:1.0'}, {'coordinate': 'fx.shapes:circle:1.0'}]})

    P['p11_iface_hierarchy'] = ([
        ('fx.p11:api:1.0', [
            iface('p11/api/Collection', methods=[
                M('size', '()I', ACC_PUBLIC | ACC_ABSTRACT),
                M('isEmpty', '()Z', calls=[('interface', 'p11/api/Collection', 'size', '()I')]),
            ]),
            iface('p11/api/List', ['p11/api/Collection'], methods=[
                M('get', '(I)Ljava/lang/Object;', ACC_PUBLIC | ACC_ABSTRACT)]),
            K('p11/api/AbstractList', ifaces=['p11/api/List'],
              flags=ACC_PUBLIC | ACC_SUPER | ACC_ABSTRACT, methods=[init(), M('size', '()I')]),
        ]),
        ('fx.p11:impl1:1.0', [
            K('p11/impl1/ArrayList', 'p11/api/AbstractList', methods=[
                init('p11/api/AbstractList'), M('get', '(I)Ljava/lang/Object;'),
                M('size', '()I')]),
        ]),
        ('fx.p11:impl2:1.0', [
            K('p11/impl2/LinkedList', 'p11/api/AbstractList', methods=[
                init('p11/api/AbstractList'), M('get', '(I)Ljava/lang/Object;'),
                M('isEmpty', '()Z')]),
        ]),
        ('fx.p11:app:1.0', [
            K('p11/app/Main', methods=[M('main', MAIN, PS, [
                ('interface', 'p11/api/List', 'size', '()I'),
                ('interface', 'p11/api/Collection', 'isEmpty', '()Z'),
                ('interface', 'p11/api/List', 'get', '(I)Ljava/lang/Object;'),
                ('virtual', 'p11/api/AbstractList', 'isEmpty', '()Z'),
                ('virtual', 'p11/impl1/ArrayList', 'isEmpty', '()Z'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p11:app:1.0', 'children': [
        {'coordinate': 'fx.p11:impl1:1.0', 'children': [{'coordinate': 'fx.p11:api:1.0'}]},
        {'coordinate': 'fx.p11:impl2:1.0', 'children': [{'coordinate': 'fx.p11:api:1.0'}]}]})

    P['p12_versions'] = ([
        ('fx.p12:log:1.0', [
            K('p12/log/Logger', methods=[
                M('get', '()Lp12/log/Logger;', PS),
                M('info', '(Ljava/lang/String;)V'),
            ]),
        ]),
        ('fx.p12:log:2.0', [
            K('p12/log/Logger', methods=[
                M('get', '()Lp12/log/Logger;', PS),
                M('info', '(Ljava/lang/String;)V'),
                M('debug', '(Ljava/lang/String;)V'),
            ]),
        ]),
        ('fx.p12:net:1.0', [
            K('p12/net/Client', methods=[init(), M('connect', '()V', calls=[
                ('static', 'p12/log/Logger', 'get', '()Lp12/log/Logger;'),
                ('virtual', 'p12/log/Logger', 'debug', '(Ljava/lang/String;)V'),
                ('virtual', 'p12/log/Logger', 'info', '(Ljava/lang/String;)V'),
            ])]),
        ]),
        ('fx.p12:api:1.0', [
            iface('p12/api/Codec', methods=[
                M('of', '()Lp12/api/Codec;', PS),
                M('encode', '()V', ACC_PUBLIC | ACC_ABSTRACT),
                M('helper', '()V', ACC_PRIVATE),
                M('twice', '()V', calls=[
                    ('special', 'p12/api/Codec', 'helper', '()V', 'itf'),
                    ('interface', 'p12/api/Codec', 'encode', '()V'),
                ]),
            ]),
        ]),
        ('fx.p12:codecs:1.0', [
            K('p12/codecs/Json', ifaces=['p12/api/Codec'], methods=[
                init(), M('encode', '()V'), M('helper', '()V')]),
            K('p12/codecs/Xml', ifaces=['p12/api/Codec'], methods=[init(), M('encode', '()V')]),
        ]),
        ('fx.p12:app:1.0', [
            K('p12/app/Main', methods=[M('main', MAIN, PS, [
                ('static', 'p12/api/Codec', 'of', '()Lp12/api/Codec;', 'itf'),
                ('interface', 'p12/api/Codec', 'encode', '()V'),
                ('interface', 'p12/api/Codec', 'twice', '()V'),
                ('interface', 'p12/api/Codec', 'helper', '()V'),
                ('static', 'p12/log/Logger', 'get', '()Lp12/log/Logger;'),
                ('virtual', 'p12/net/Client', 'connect', '()V'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p12:app:1.0', 'children': [
        {'coordinate': 'fx.p12:log:1.0'},
        {'coordinate': 'fx.p12:net:1.0', 'children': [{'coordinate': 'fx.p12:log:2.0'}]},
        {'coordinate': 'fx.p12:codecs:1.0', 'children': [{'coordinate': 'fx.p12:api:1.0'}]}]})

    P['p14_single_package'] = ([
        ('fx.p14:solo:1.0', [
            iface('p14/Action', methods=[M('act', '()V', ACC_PUBLIC | ACC_ABSTRACT)]),
            K('p14/Base', methods=[init(), M('act', '()V'), M('step', '()V')]),
            K('p14/Impl', 'p14/Base', ifaces=['p14/Action'], methods=[
                init('p14/Base'), M('step', '()V', calls=[
                    ('special', 'p14/Base', 'step', '()V')])]),
            K('p14/Main', methods=[M('main', MAIN, PS, [
                ('special', 'p14/Impl', '<init>', '()V'),
                ('interface', 'p14/Action', 'act', '()V'),
                ('virtual', 'p14/Base', 'step', '()V'),
                ('static', 'p14/Main', 'helper', '()V'),
                ('dynamic', 'p14/Main', 'helper', '()V'),
                ('virtual', 'java/lang/StringBuilder', 'append',
                 '(Ljava/lang/String;)Ljava/lang/StringBuilder;'),
            ]), M('helper', '()V', PS)]),
        ]),
    ], {'coordinate': 'fx.p14:solo:1.0'})

    P['p15_class_wins'] = ([
        ('fx.p15:lib:1.0', [
            K('p15/lib/Base', methods=[init(), M('m', '()V')]),
            iface('p15/lib/I', methods=[M('m', '()V'), M('n', '()V')]),
            iface('p15/lib/I2', ['p15/lib/I'], methods=[M('n', '()V')]),
        ]),
        ('fx.p15:app:1.0', [
            K('p15/app/Impl', 'p15/lib/Base', ['p15/lib/I2'], methods=[init('p15/lib/Base')]),
            K('p15/app/Impl2', 'p15/app/Impl', methods=[init('p15/app/Impl'), M('n', '()V')]),
            K('p15/app/Main', methods=[M('main', MAIN, PS, [
                ('virtual', 'p15/app/Impl', 'm', '()V'),
                ('virtual', 'p15/app/Impl', 'n', '()V'),
                ('interface', 'p15/lib/I', 'n', '()V'),
                ('interface', 'p15/lib/I', 'm', '()V'),
            ])]),
        ]),
    ], {'coordinate': 'fx.p15:app:1.0', 'children': [{'coordinate': 'fx.p15:lib:1.0'}]})

    return P


def repo_jar_path(repo, coordinate):
    g, a, v = coordinate.split(':')
    return os.path.join(repo, *g.split('.'), a, v, '%s-%s.jar' % (a, v))


def write_package_jar(repo, coordinate, classes, rng):
    path = repo_jar_path(repo, coordinate)
    entries = [('META-INF/MANIFEST.MF', b'Manifest-Version: 1.0\r\n\r\n', zipfile.ZIP_DEFLATED)]
    for k in classes:
        comp = zipfile.ZIP_DEFLATED if rng.random() < 0.7 else zipfile.ZIP_STORED
        entries.append((k.name + '.class', assemble_class(k, rng), comp))
    write_zip(path, entries)


def build_programs():
    repo = os.path.join(OUT, 'repo')
    shutil.rmtree(repo, ignore_errors=True)
    pdir = os.path.join(OUT, 'programs')
    shutil.rmtree(pdir, ignore_errors=True)
    os.makedirs(pdir)
    written = set()
    for pname, (packages, tree) in sorted(programs().items()):
        rng = random.Random(pname)
        for coordinate, classes in packages:
            if coordinate in written:
                continue
            written.add(coordinate)
            write_package_jar(repo, coordinate, classes, rng)
        with open(os.path.join(pdir, pname + '.json'), 'w') as f:
            json.dump(tree, f, indent=2, sort_keys=True)
            f.write('\n')
    # the shapes program with the implementing package left out
    os.makedirs(os.path.join(pdir, 'variants'))
    with open(os.path.join(pdir, 'variants', 'shapes_reduced.json'), 'w') as f:
        json.dump({'coordinate': 'fx.shapes:app:1.0',
                   'children': [{'coordinate': 'fx.shapes:shapes:1.0'}]}, f, indent=2)
        f.write('\n')


# ---------------------------------------------------------------------------
# synthetic benchmark ecosystem
# ---------------------------------------------------------------------------

def build_bench():
    rng = random.Random(20200101)
    repo = os.path.join(OUT, 'repo')
    bdir = os.path.join(OUT, 'bench')
    shutil.rmtree(bdir, ignore_errors=True)
    os.makedirs(bdir)
    n_libs = 16
    libs = []
    for i in range(n_libs):
        coord = 'fx.bench:lib%02d:1.0' % i
        deps = sorted(rng.sample(range(i), min(i, rng.randrange(0, 3)))) if i else []
        libs.append((coord, deps))
    # class/method universe per library
    universe = {}
    for i, (coord, deps) in enumerate(libs):
        pkg = 'bench/l%02d' % i
        names = ['%s/C%02d' % (pkg, j) for j in range(24)]
        universe[i] = names
    for i, (coord, deps) in enumerate(libs):
        visible = [i] + deps
        classes = []
        for j, cname in enumerate(universe[i]):
            is_iface = j % 8 == 7
            if is_iface:
                methods = [M('op%d' % k, '()V', ACC_PUBLIC | ACC_ABSTRACT) for k in range(4)]
                classes.append(iface(cname, methods=methods))
                continue
            super_name = OBJECT
            if j > 0 and rng.random() < 0.6:
                lib = rng.choice(visible)
                cand = [c for c in universe[lib] if (lib != i or c < cname)
                        and int(c[-2:]) % 8 != 7]
                if cand:
                    super_name = rng.choice(cand)
            ifaces = []
            if rng.random() < 0.4:
                lib = rng.choice(visible)
                ifaces = [c for c in universe[lib] if int(c[-2:]) % 8 == 7][:1]
            methods = [init(super_name)]
            for k in range(6):
                calls = []
                for _ in range(rng.randrange(2, 9)):
                    lib = rng.choice(visible)
                    target = rng.choice(universe[lib])
                    op = 'op%d' % rng.randrange(4)
                    if int(target[-2:]) % 8 == 7:
                        calls.append(('interface', target, op, '()V'))
                    else:
                        kind = rng.choice(['virtual', 'virtual', 'static', 'special'])
                        calls.append((kind, target, op, '()V'))
                methods.append(M('op%d' % k, '()V', calls=calls))
            classes.append(K(cname, super_name, ifaces, methods=methods))
        write_package_jar(repo, coord, classes, rng)

    def subtree(i, depth):
        node = {'coordinate': libs[i][0]}
        if depth < 4 and libs[i][1]:
            node['children'] = [subtree(d, depth + 1) for d in libs[i][1]]
        return node

    for t in range(6):
        app = 'fx.bench:app%d:1.0' % t
        roots = sorted(rng.sample(range(n_libs), 4))
        visible = sorted(set(roots))
        app_classes = [K('bench/app%d/Main' % t, methods=[M('main', MAIN, PS, [
            ('virtual', rng.choice(universe[r]), 'op%d' % rng.randrange(4), '()V')
            for r in visible for _ in range(3)])])]
        write_package_jar(repo, app, app_classes, rng)
        tree = {'coordinate': app, 'children': [subtree(r, 1) for r in roots]}
        with open(os.path.join(bdir, 'tree%d.json' % t), 'w') as f:
            json.dump(tree, f, indent=2, sort_keys=True)
            f.write('\n')


# ---------------------------------------------------------------------------
# version-conflict trees for mediation
# ---------------------------------------------------------------------------

def build_mediation():
    mdir = os.path.join(OUT, 'mediation')
    shutil.rmtree(mdir, ignore_errors=True)
    os.makedirs(mdir)

    def n(coord, *children):
        node = {'coordinate': coord}
        if children:
            node['children'] = list(children)
        return node

    trees = {
        # nearer version beats a deeper one
        'm01_nearest': n('r:root:1', n('g:a:1'), n('g:b:1', n('g:a:2'))),
        # two versions at equal depth: the first declared wins
        'm02_tie_leftmost': n('r:root:1', n('g:a:1'), n('g:a:2')),
        # tie at depth 2 under different parents
        'm03_tie_cousins': n('r:root:1', n('g:b:1', n('g:c:3')), n('g:d:1', n('g:c:2'))),
        # transitive conflict: the losing subtree still contributes
        'm04_transitive': n('r:root:1',
                            n('g:x:1', n('g:y:1', n('g:z:1'))),
                            n('g:y:2', n('g:w:1', n('g:z:2')))),
        # the deeper version is newer and still loses
        'm05_deeper_newer': n('r:root:1', n('g:p:1', n('g:q:9')), n('g:q:1')),
        # same version repeated is not a conflict
        'm06_same_version': n('r:root:1', n('g:a:1', n('g:b:1')), n('g:b:1', n('g:a:1'))),
        # same artifact id in different groups are distinct packages
        'm07_groups': n('r:root:1', n('g1:lib:1'), n('g2:lib:2', n('g1:lib:3'))),
        # a dependency on another version of the root itself
        'm08_root_conflict': n('r:root:1', n('g:a:1', n('r:root:0'))),
        # packaging tokens in coordinates
        'm09_packaging': n('r:root:jar:1', n('g:a:jar:1:compile'), n('g:b:1', n('g:a:jar:2'))),
        # wider tree with several conflicts on several levels
        'm10_mixed': n('r:root:1',
                       n('g:a:1', n('g:c:1'), n('g:d:2', n('g:e:1'))),
                       n('g:b:1', n('g:d:1'), n('g:c:2', n('g:e:2'), n('g:a:3'))),
                       n('g:e:3')),
    }
    for name, tree in sorted(trees.items()):
        with open(os.path.join(mdir, name + '.json'), 'w') as f:
            json.dump(tree, f, indent=2, sort_keys=True)
            f.write('\n')


def main():
    build_class_fixtures()
    build_jar_fixtures()
    build_programs()
    build_bench()
    build_mediation()


if __name__ == '__main__':
    main()
